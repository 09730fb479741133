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
#ifndef TREESTM_ORACLE_HPP
#define TREESTM_ORACLE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "treestm/corpus.hpp"
#include "treestm/matrix.hpp"
#include "treestm/model_state.hpp"

namespace treestm {

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
  long n_samples = 0;
};

// Monte-Carlo surrogate of the per-document bound: samples theta ~ Dir(gamma),
// pi_j ~ Dir(nu_j), z_n ~ Mult(phi_n) independently and averages an integrand
// whose q-expectation equals document_elbo.total term by term. Never touches
// the psi-based evaluation path it is used to check.
//
// Samples are drawn in fixed-size chunks with per-chunk derived seeds, so a
// result depends only on (state, n_samples, seed) however the chunks are
// scheduled.
McEstimate mc_elbo_estimate(const DepDocument& doc, const DocVariational& var,
                            const GlobalParams& global, const Hyperparams& hyper,
                            long n_samples, std::uint64_t seed);

// Central differences with per-coordinate step h*max(|x_i|, 1).
// Throws NumericalError if f evaluates non-finite at a probe point.
std::vector<double> finite_diff(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h);

// A corpus drawn from the generative model the bound targets:
//   theta_d ~ Dir(beta_star*alpha_d); z_root ~ Mult(theta);
//   z_n | parent ~ Mult(theta_i pi_{z_p,i} / sum_k theta_k pi_{z_p,k});
//   w_n ~ Mult(tau_{z_n}); lengths 1 + Poisson(mean_length - 1);
//   node n >= 1 attaches to a uniform-random earlier node.
// The vocabulary is w0..w{V-1} aligned with true_tau columns.
struct SyntheticCorpus {
  Corpus corpus;
  std::vector<std::vector<int>> true_z;  // per document, per word
};

SyntheticCorpus sample_corpus(const Matrix& true_tau, const Matrix& true_pi,
                              const Hyperparams& hyper, int n_docs,
                              double mean_length, std::uint64_t seed);

// One `doc word z` line per token.
void write_truth_sidecar(const SyntheticCorpus& synth, std::ostream& out);

// Best topic permutation under mean total-variation distance between
// matched rows (exhaustive; K <= 8). Inputs are row-stochastic matrices.
std::pair<std::vector<int>, double> match_topics(const Matrix& estimated_tau,
                                                 const Matrix& true_tau);

}  // namespace treestm

#endif
