/*
   Copyright 2026 The treestm Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#include "treestm/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace treestm {

namespace {

const double kLnSqrt2Pi = 0.91893853320467274178032973640562;

void require_positive(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error(std::string(fn) +
                            ": argument must be finite and > 0");
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  // Raise the argument until Stirling's series converges fast.
  double shift = 0.0;
  while (x < 8.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  // Stirling: (x-1/2)ln x - x + ln sqrt(2pi) + sum B_2n/(2n(2n-1) x^(2n-1)).
  double r = 1.0 / x;
  double r2 = r * r;
  double series = r *
      (1.0 / 12.0 +
       r2 * (-1.0 / 360.0 +
       r2 * (1.0 / 1260.0 +
       r2 * (-1.0 / 1680.0 +
       r2 * (1.0 / 1188.0 +
       r2 * (-691.0 / 360360.0 +
       r2 * (1.0 / 156.0 +
       r2 * (-3617.0 / 122400.0))))))));
  return (x - 0.5) * std::log(x) - x + kLnSqrt2Pi + series + shift;
}

double digamma(double x) {
  require_positive(x, "digamma");
  // psi(x) = psi(x+1) - 1/x, applied until x >= 10.
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic: ln x - 1/(2x) - sum B_2n/(2n x^(2n)).
  double r2 = 1.0 / (x * x);
  double series = r2 *
      (1.0 / 12.0 +
       r2 * (-1.0 / 120.0 +
       r2 * (1.0 / 252.0 +
       r2 * (-1.0 / 240.0 +
       r2 * (1.0 / 132.0 +
       r2 * (-691.0 / 32760.0 +
       r2 * (1.0 / 12.0)))))));
  return std::log(x) - 0.5 / x - series + acc;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  // psi'(x) = psi'(x+1) + 1/x^2, applied until x >= 10.
  double acc = 0.0;
  while (x < 10.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  // Asymptotic: 1/x + 1/(2x^2) + sum B_2n/x^(2n+1).
  double r = 1.0 / x;
  double r2 = r * r;
  double series = r2 * r *
      (1.0 / 6.0 +
       r2 * (-1.0 / 30.0 +
       r2 * (1.0 / 42.0 +
       r2 * (-1.0 / 30.0 +
       r2 * (5.0 / 66.0 +
       r2 * (-691.0 / 2730.0 +
       r2 * (7.0 / 6.0)))))));
  return r + 0.5 * r2 + series + acc;
}

std::vector<double> dirichlet_expected_log(const std::vector<double>& params) {
  if (params.empty()) {
    throw std::domain_error("dirichlet_expected_log: empty parameter vector");
  }
  double total = 0.0;
  for (double p : params) {
    require_positive(p, "dirichlet_expected_log");
    total += p;
  }
  double psi_total = digamma(total);
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[i] = digamma(params[i]) - psi_total;
  }
  return out;
}

double log_sum_exp(const double* xs, int n) {
  if (n <= 0) throw std::domain_error("log_sum_exp: empty input");
  if (n == 1) return xs[0];
  double m = xs[0];
  for (int i = 1; i < n; ++i) {
    if (xs[i] > m) m = xs[i];
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(xs[i] - m);
  return m + std::log(s);
}

double log_sum_exp(const std::vector<double>& xs) {
  return log_sum_exp(xs.data(), static_cast<int>(xs.size()));
}

}  // namespace treestm
