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
#ifndef TREESTM_ELBO_HPP
#define TREESTM_ELBO_HPP

#include <vector>

#include "treestm/corpus.hpp"
#include "treestm/matrix.hpp"
#include "treestm/model_state.hpp"

namespace treestm {

// psi/mean tables over nu; valid as long as nu is unchanged (a whole E-step
// sweep), so they are computed once and passed into the hot paths.
struct NuTables {
  Matrix elog_pi;  // (j,i): psi(nu_ji) - psi(sum_k nu_jk)
  Matrix nu_mean;  // (j,i): nu_ji / sum_k nu_jk
  std::vector<double> row_sum;
};

NuTables make_nu_tables(const Matrix& nu);

// Same over gamma; recomputed whenever gamma moves.
struct ThetaTables {
  std::vector<double> elog_theta;  // psi(gamma_i) - psi(sum)
  std::vector<double> theta_mean;  // gamma_i / sum
  double gamma_sum = 0.0;
};

ThetaTables make_theta_tables(const std::vector<double>& gamma);

// q[j] = E_q[sum_i theta_i pi_{j,i}] = sum_i theta_mean_i nu_mean_{j,i}.
// The expected edge normalizer given parent topic j; each entry is in (0,1].
std::vector<double> edge_ratio(const ThetaTables& theta, const NuTables& nu);

// s[n] = sum_j phi_{p(n),j} q_j for non-root n; the root entry is set to 1
// and ignored by everything downstream.
std::vector<double> edge_normalizer(const DepDocument& doc,
                                    const DocVariational& var,
                                    const GlobalParams& global);
std::vector<double> edge_normalizer(const DepDocument& doc,
                                    const DocVariational& var,
                                    const std::vector<double>& q);

// The per-document bound, term by term. Conventions: 0*log 0 = 0 in the phi
// entropy; the root word is excluded from the transition and omega terms
// (its topic is drawn from theta alone) but still contributes to the
// theta-allocation, word, and entropy terms.
// Throws std::invalid_argument on dimension mismatch.
ElboBreakdown document_elbo(const DepDocument& doc, const DocVariational& var,
                            const GlobalParams& global,
                            const Hyperparams& hyper);
ElboBreakdown document_elbo(const DepDocument& doc, const DocVariational& var,
                            const GlobalParams& global,
                            const Hyperparams& hyper, const NuTables& nu_tables);

}  // namespace treestm

#endif
