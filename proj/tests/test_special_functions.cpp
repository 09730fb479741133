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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "treestm/rng.hpp"
#include "treestm/special_functions.hpp"

using namespace treestm;

namespace {

// Reference values computed with 40-digit arithmetic (mpmath), frozen.
struct Ref {
  double x, lgamma, digamma, trigamma;
};
const Ref kRefs[] = {
    {9.9999999999999995e-07, 13.815509980749432, -1000000.5772140201, 1000000000001.645},
    {0.0001, 9.2102826586339628, -10000.577051183514, 100000001.64469367},
    {0.01, 4.5994798780420219, -100.56088545786868, 10001.621213528313},
    {0.10000000000000001, 2.252712651734206, -10.423754940411076, 101.43329915079275},
    {0.25, 1.2880225246980774, -4.2274535333762655, 17.197329154507109},
    {0.5, 0.57236494292470008, -1.9635100260214235, 4.934802200544679},
    {0.75, 0.20328095143129538, -1.0858608797864722, 2.5418796476716063},
    {1.0, 0.0, -0.57721566490153287, 1.6449340668482264},
    {1.2, -0.085374090003315833, -0.28903989659218837, 1.2673772054237793},
    {1.4616321449683622, -0.12148629053584961, 0.0, 0.9676722454476212},
    {2.0, 0.0, 0.42278433509846713, 0.64493406684822641},
    {2.5, 0.28468287047291918, 0.70315664064524319, 0.49035775610023485},
    {3.0, 0.69314718055994529, 0.92278433509846713, 0.39493406684822646},
    {5.0, 3.1780538303479458, 1.5061176684318005, 0.22132295573711533},
    {7.5, 7.5343642367587327, 1.9467574842460869, 0.1426158966967038},
    {10.0, 12.801827480081469, 2.2517525890667209, 0.10516633568168575},
    {25.0, 54.784729398112319, 3.198742512851974, 0.040810663257225578},
    {100.0, 359.1342053695754, 4.6001618527380872, 0.010050166663333571},
    {1234.5, 7550.5509010778951, 7.1180162318279976, 0.00081037272712696667},
    {1e5, 1051287.7089736569, 11.512920464961896, 1.0000050000166667e-05},
    {1e8, 1742068066.1038346, 18.420680738952367, 1.0000000049999999e-08},
};

}  // namespace

TEST_CASE("log_gamma matches high-precision references") {
  for (const Ref& r : kRefs) {
    double got = log_gamma(r.x);
    // scaled error: the targets pass through 0 at x = 1 and x = 2, where a
    // relative criterion is not meaningful in double precision
    double tol = 1e-12 * std::max(1.0, std::fabs(r.lgamma));
    CHECK(std::fabs(got - r.lgamma) <= tol);
  }
}

TEST_CASE("log_gamma spec values") {
  CHECK(std::fabs(log_gamma(1.0)) <= 1e-14);
  CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-13));
  CHECK(log_gamma(0.5) ==
        doctest::Approx(std::log(std::sqrt(std::acos(-1.0)))).epsilon(1e-13));
}

TEST_CASE("log_gamma agrees with the C library on a dense grid") {
  for (double x = 1e-6; x < 1e8; x *= 1.37) {
    double mine = log_gamma(x);
    double libm = std::lgamma(x);
    CHECK(std::fabs(mine - libm) <= 1e-12 * std::max(1.0, std::fabs(libm)));
  }
}

TEST_CASE("digamma matches high-precision references") {
  for (const Ref& r : kRefs) {
    // absolute criterion per contract, scaled where psi itself is huge
    double tol = 1e-10 * std::max(1.0, std::fabs(r.digamma) * 1e-4);
    CHECK(std::fabs(digamma(r.x) - r.digamma) <= tol);
  }
}

TEST_CASE("digamma spec values") {
  const double euler = 0.57721566490153286061;
  CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-12));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - euler).epsilon(1e-12));
  CHECK(digamma(0.5) ==
        doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("trigamma matches high-precision references") {
  for (const Ref& r : kRefs) {
    double tol = 1e-10 * std::max(1.0, std::fabs(r.trigamma));
    CHECK(std::fabs(trigamma(r.x) - r.trigamma) <= tol);
  }
}

TEST_CASE("digamma recurrence psi(x+1) - psi(x) = 1/x") {
  // 1000 log-spaced points over [1e-3, 1e6]
  const double lo = std::log(1e-3), hi = std::log(1e6);
  for (int i = 0; i < 1000; ++i) {
    double x = std::exp(lo + (hi - lo) * i / 999.0);
    double lhs = digamma(x + 1.0) - digamma(x);
    CHECK(std::fabs(lhs - 1.0 / x) <= 1e-10);
  }
}

TEST_CASE("trigamma recurrence psi'(x) - psi'(x+1) = 1/x^2") {
  for (int i = 0; i < 200; ++i) {
    double x = std::exp(std::log(1e-2) + (std::log(1e4) - std::log(1e-2)) * i / 199.0);
    double lhs = trigamma(x) - trigamma(x + 1.0);
    CHECK(std::fabs(lhs - 1.0 / (x * x)) <= 1e-10 * std::max(1.0, 1.0 / (x * x)));
  }
}

TEST_CASE("log_gamma is convex on a grid") {
  const double h = 1e-3;
  for (double x = 0.05; x < 50.0; x += 0.05) {
    double second = log_gamma(x + h) + log_gamma(x - h) - 2.0 * log_gamma(x);
    CHECK(second >= -1e-9);
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(-1.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(log_gamma(HUGE_VAL), std::domain_error);
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-0.5), std::domain_error);
  CHECK_THROWS_AS(trigamma(0.0), std::domain_error);
  CHECK_THROWS_AS(dirichlet_expected_log({}), std::domain_error);
  CHECK_THROWS_AS(dirichlet_expected_log({1.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), std::domain_error);
}

TEST_CASE("dirichlet_expected_log spec values") {
  auto v = dirichlet_expected_log({1.0, 1.0});
  CHECK(v[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(-1.0).epsilon(1e-12));

  auto single = dirichlet_expected_log({5.0});
  CHECK(single[0] == 0.0);

  auto multi = dirichlet_expected_log({2.0, 3.0, 4.0});
  for (std::size_t i = 0; i + 1 < multi.size(); ++i) CHECK(multi[i] < 0.0);
}

TEST_CASE("dirichlet_expected_log matches Monte Carlo") {
  // E[ln theta_i] under Dir(2,3,4), 1e6 samples, 3 standard errors
  const std::vector<double> params = {2.0, 3.0, 4.0};
  auto expected = dirichlet_expected_log(params);
  const long n = 1000000;
  Rng rng(20260809);
  std::vector<double> theta(3);
  std::vector<double> mean(3, 0.0), m2(3, 0.0);
  for (long s = 0; s < n; ++s) {
    rng.dirichlet(params, theta);
    for (int i = 0; i < 3; ++i) {
      double x = std::log(theta[i]);
      double d = x - mean[i];
      mean[i] += d / (s + 1);
      m2[i] += d * (x - mean[i]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    double se = std::sqrt(m2[i] / (n - 1) / n);
    CHECK(std::fabs(mean[i] - expected[i]) <= 3.0 * se);
  }
}

TEST_CASE("log_sum_exp spec values") {
  CHECK(log_sum_exp({0.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(log_sum_exp({-1000.0, -1000.0}) ==
        doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-14));
  CHECK(log_sum_exp({3.0}) == 3.0);  // exact for singleton
}

TEST_CASE("log_sum_exp shift invariance") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    int n = 1 + rng.uniform_int(8);
    std::vector<double> xs(n);
    for (double& x : xs) x = 20.0 * rng.uniform() - 10.0;
    double base = log_sum_exp(xs);
    for (double c : {1.0, -3.5, 700.0, -700.0}) {
      std::vector<double> shifted = xs;
      for (double& x : shifted) x += c;
      CHECK(std::fabs(log_sum_exp(shifted) - (base + c)) <= 1e-12 *
            std::max(1.0, std::fabs(base + c)));
    }
  }
}
