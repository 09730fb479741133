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
#ifndef TREESTM_INFERENCE_HPP
#define TREESTM_INFERENCE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "treestm/corpus.hpp"
#include "treestm/elbo.hpp"
#include "treestm/matrix.hpp"
#include "treestm/model_state.hpp"

namespace treestm {

struct EStepConfig {
  int max_sweeps = 50;
  double tol = 1e-6;  // relative per-document bound change
  int gamma_max_inner_iters = 100;
  double gamma_step_shrink = 0.5;

  void validate() const;  // throws std::invalid_argument
};

struct TrainConfig {
  int max_em_iters = 200;
  double em_tol = 1e-5;  // relative corpus bound change
  EStepConfig estep;
  std::uint64_t seed = 0;
  int worker_count = 1;

  void validate() const;
};

// One corpus-bound evaluation per EM iteration: the total, its per-term
// sums over documents, the corpus-level nu prior/entropy terms, and the
// iteration wall clock.
struct TraceRow {
  int iter = 0;
  double elbo = 0.0;
  double prior = 0.0;
  double theta = 0.0;
  double transition = 0.0;
  double omega = 0.0;
  double words = 0.0;
  double dir_entropy = 0.0;
  double phi_entropy = 0.0;
  double nu_terms = 0.0;
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
};

// `iter,elbo,prior,theta,transition,omega,words,dir_entropy,phi_entropy,nu_terms,seconds`
// Values with 17 significant digits; only the seconds column is
// run-dependent.
void write_trace_csv(const TrainTrace& trace, std::ostream& out);

// Records the corpus-bound change of every individual coordinate update so
// a run can be audited for monotonicity. Per-document updates change the
// corpus bound by exactly their document-bound change; tau/nu deltas are
// corpus-level.
struct UpdateAudit {
  enum class Kind { Omega, Phi, Gamma, Tau, Nu };
  struct Delta {
    Kind kind;
    double delta;
  };
  std::vector<Delta> deltas;
  double initial_corpus_elbo = 0.0;  // before the first E-step

  double min_delta() const;
  static const char* kind_name(Kind k);
};

// --- E-step coordinate updates (each leaves the document bound no lower) ---

// Closed form: omega_n = s[n] for non-root n (floored at 1e-300); the root
// entry is reset to 1 and stays inert.
void update_omega(const DepDocument& doc, DocVariational& var,
                  const GlobalParams& global);

// Exact coordinate maximizer of the bound in phi row n (softmax of the
// per-topic coefficient), holding everything else fixed.
void update_phi(const DepDocument& doc, DocVariational& var,
                const GlobalParams& global, int n);

// Analytic d(total)/d(gamma_i), including the trigamma contributions of the
// psi terms and the quotient-rule contribution of the edge-normalizer
// bound.
std::vector<double> gamma_gradient(const DepDocument& doc,
                                   const DocVariational& var,
                                   const GlobalParams& global,
                                   const Hyperparams& hyper);

// Backtracking gradient ascent in log gamma; accepts only steps that do not
// lower the computed bound.
void update_gamma(const DepDocument& doc, DocVariational& var,
                  const GlobalParams& global, const Hyperparams& hyper,
                  const EStepConfig& cfg);

// Full per-document E-step from a fresh seeded initialization: sweeps of
// {omega; phi in parents-before-children order; gamma} until the relative
// bound change drops below cfg.tol or max_sweeps is hit.
std::pair<DocVariational, ElboBreakdown> estep_document(
    const DepDocument& doc, const GlobalParams& global,
    const Hyperparams& hyper, const EStepConfig& cfg, std::uint64_t seed);

// Same sweep loop, resuming from an existing state (used by train, which
// keeps per-document states warm across EM iterations so every coordinate
// update moves the corpus bound monotonically).
ElboBreakdown estep_resume(const DepDocument& doc, DocVariational& var,
                           const GlobalParams& global, const Hyperparams& hyper,
                           const EStepConfig& cfg, const NuTables& nu_tables,
                           UpdateAudit* audit);

// --- M-step ---

// Per-document expected sufficient statistics for the M-step.
struct SuffStats {
  Matrix counts;  // K x V: expected word counts
  Matrix A;       // K x K: (j,i) += phi_{p(n),j} phi_{n,i} over edges
  Matrix C;       // K x K: (j,i) += theta_mean_i * sum_edges phi_{p(n),j}/omega_n

  void add(const SuffStats& o);
};

SuffStats doc_suff_stats(const DepDocument& doc, const DocVariational& var,
                         int K, int V);

// Deterministic pairwise merge over documents in corpus order.
SuffStats merge_suff_stats(const Corpus& corpus,
                           const std::vector<DocVariational>& states, int K,
                           int V);

// Closed-form tau update from expected counts, with the 1e-10 smoothing
// floor; rows of exp(log_tau) sum to 1.
Matrix update_tau(const Corpus& corpus,
                  const std::vector<DocVariational>& states, int K, int V);
Matrix update_tau_from_counts(const Matrix& counts);

// Corpus-level objective restricted to nu row j (transition psi terms, the
// omega-bound coupling, and the symmetric-Dirichlet prior plus entropy of
// q(pi_j)); its row gradient; and the monotone row-wise update.
double nu_row_objective(const double* a_row, const double* c_row,
                        const std::vector<double>& nu_row, double alpha_t);
std::vector<double> nu_row_gradient(const double* a_row, const double* c_row,
                                    const std::vector<double>& nu_row,
                                    double alpha_t);
Matrix update_nu_from_stats(const SuffStats& stats, const Matrix& nu,
                            double alpha_t, const EStepConfig& cfg);
Matrix update_nu(const Corpus& corpus, const std::vector<DocVariational>& states,
                 const GlobalParams& global, const Hyperparams& hyper,
                 const EStepConfig& cfg);

// sum_j E_q[log p(pi_j | alpha_t)] + H[q(pi_j)]; the corpus-level part of
// the bound that the per-document terms do not carry.
double nu_prior_entropy(const Matrix& nu, double alpha_t);

// Per-term corpus aggregates (pairwise over documents) plus nu terms.
TraceRow corpus_elbo_row(const Corpus& corpus,
                         const std::vector<DocVariational>& states,
                         const GlobalParams& global, const Hyperparams& hyper,
                         int worker_count = 1);

// Variational EM. Deterministic for a fixed seed regardless of
// worker_count: per-document seeds are derived from (seed, doc index) and
// all cross-document reductions are pairwise in document order.
std::pair<GlobalParams, TrainTrace> train(const Corpus& corpus,
                                          const Hyperparams& hyper,
                                          const TrainConfig& cfg,
                                          UpdateAudit* audit = nullptr);

// Fits a fresh variational state for `doc` under frozen global parameters
// and returns total/N (0 for an empty document).
double heldout_bound(const GlobalParams& global, const Hyperparams& hyper,
                     const DepDocument& doc, const EStepConfig& cfg,
                     std::uint64_t seed);

}  // namespace treestm

#endif
