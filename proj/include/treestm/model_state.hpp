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
#ifndef TREESTM_MODEL_STATE_HPP
#define TREESTM_MODEL_STATE_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "treestm/corpus.hpp"
#include "treestm/matrix.hpp"

namespace treestm {

// Fixed hyperparameters: the document-topic prior is Dirichlet with
// parameter vector beta_star * alpha_d; alpha_t is the symmetric prior
// weight on transition rows.
struct Hyperparams {
  std::vector<double> alpha_d;
  double beta_star = 1.0;
  double alpha_t = 1.0;

  int K() const { return static_cast<int>(alpha_d.size()); }
};

// Corpus-level parameters. tau is kept in log space so the word-likelihood
// term consumes it directly; every row of exp(log_tau) sums to 1. nu row j
// parameterizes the variational Dirichlet over transitions out of topic j.
struct GlobalParams {
  Matrix log_tau;  // K x V
  Matrix nu;       // K x K

  int K() const { return log_tau.rows; }
  int V() const { return log_tau.cols; }
};

// Per-document variational state: q(theta) = Dir(gamma), q(z_n) = Mult(phi
// row n), omega_n the per-word auxiliary scalar of the edge-normalizer
// bound. omega[root] is stored but never enters the bound.
struct DocVariational {
  std::vector<double> gamma;  // K
  Matrix phi;                 // N x K
  std::vector<double> omega;  // N

  int K() const { return static_cast<int>(gamma.size()); }
  int N() const { return phi.rows; }
};

// The six term groups of the per-document bound, stored with the sign they
// carry in the total.
struct ElboBreakdown {
  double prior_cross_entropy = 0.0;  // E_q[log p(theta)]
  double theta_alloc = 0.0;          // sum_n E_q[log theta_{z_n}]
  double transition = 0.0;           // parent->child psi(nu) terms
  double omega_bound = 0.0;          // -(s/omega + log omega - 1) terms
  double word_likelihood = 0.0;      // sum_n phi . log tau column
  double dirichlet_entropy = 0.0;    // H[q(theta)]
  double phi_entropy = 0.0;          // -sum phi log phi
  double total = 0.0;

  double component_sum() const {
    return prior_cross_entropy + theta_alloc + transition + omega_bound +
           word_likelihood + dirichlet_entropy + phi_entropy;
  }
};

// gamma_i = beta_star*alpha_d_i + N/K, phi rows uniform with multiplicative
// jitter <= 1e-3 renormalized, omega = 1. Deterministic per seed.
DocVariational init_variational(const DepDocument& doc, const Hyperparams& hyper,
                                std::uint64_t seed);

// log_tau rows from normalized uniform draws; nu = alpha_t plus jitter
// <= 1e-2. Deterministic per seed.
GlobalParams init_global(int K, int V, double alpha_t, std::uint64_t seed);

// Text model format, 17 significant digits, bit-exact round trip.
void serialize_model(const GlobalParams& global, const Hyperparams& hyper,
                     const Vocabulary& vocab, std::ostream& out);

struct LoadedModel {
  GlobalParams global;
  Hyperparams hyper;
  Vocabulary vocab;
};

// Throws LoadError on version/dimension mismatch, non-finite values, or a
// truncated stream (naming the missing section).
LoadedModel deserialize_model(std::istream& in);

// Invariant checks, compiled in all builds; throw std::logic_error with the
// violated rule.
void debug_validate(const GlobalParams& global);
void debug_validate(const DocVariational& var, int K);

}  // namespace treestm

#endif
