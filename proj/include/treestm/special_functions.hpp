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
#ifndef TREESTM_SPECIAL_FUNCTIONS_HPP
#define TREESTM_SPECIAL_FUNCTIONS_HPP

#include <vector>

namespace treestm {

// ln Gamma(x) for x > 0. Argument-raising recurrence into the asymptotic
// (Stirling) regime. Relative error ~1e-14 on [1e-6, 1e8].
// Throws std::domain_error for non-finite or non-positive x.
double log_gamma(double x);

// psi(x) = d/dx ln Gamma(x) for x > 0. Absolute error well under 1e-10 on
// [1e-6, 1e8]. Throws std::domain_error for non-finite or non-positive x.
double digamma(double x);

// psi'(x) for x > 0. Needed by the analytic gamma/nu gradients, which
// differentiate through psi terms of the bound.
double trigamma(double x);

// Entry i is psi(params_i) - psi(sum params): E[ln theta_i] under a
// Dirichlet with the given parameters. Throws std::domain_error on an empty
// vector or non-positive entries.
std::vector<double> dirichlet_expected_log(const std::vector<double>& params);

// ln sum_i exp(x_i) by max-shift; exact for a singleton.
// Throws std::domain_error on empty input.
double log_sum_exp(const std::vector<double>& xs);
double log_sum_exp(const double* xs, int n);

}  // namespace treestm

#endif
