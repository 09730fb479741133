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
#include "treestm/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "treestm/errors.hpp"
#include "treestm/reduce.hpp"
#include "treestm/rng.hpp"
#include "treestm/special_functions.hpp"

namespace treestm {

void EStepConfig::validate() const {
  if (max_sweeps < 1) throw std::invalid_argument("EStepConfig: max_sweeps must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("EStepConfig: tol must be > 0");
  if (gamma_max_inner_iters < 1) {
    throw std::invalid_argument("EStepConfig: gamma_max_inner_iters must be >= 1");
  }
  if (!(gamma_step_shrink > 0.0) || !(gamma_step_shrink < 1.0)) {
    throw std::invalid_argument("EStepConfig: gamma_step_shrink must be in (0,1)");
  }
}

void TrainConfig::validate() const {
  if (max_em_iters < 1) throw std::invalid_argument("TrainConfig: max_em_iters must be >= 1");
  if (!(em_tol > 0.0)) throw std::invalid_argument("TrainConfig: em_tol must be > 0");
  if (worker_count < 1) throw std::invalid_argument("TrainConfig: worker_count must be >= 1");
  estep.validate();
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Static block partition of [0, n) over `workers` threads. Results must be
// written to per-index slots so the outcome is identical for any worker
// count.
template <typename Fn>
void parallel_over(int n, int workers, Fn&& fn) {
  workers = std::min(workers, std::max(1, n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  int base = n / workers, extra = n % workers, start = 0;
  std::vector<std::pair<int, int>> spans(workers);
  for (int w = 0; w < workers; ++w) {
    int len = base + (w < extra ? 1 : 0);
    spans[w] = {start, start + len};
    start += len;
  }
  for (int w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = spans[w].first; i < spans[w].second; ++i) fn(i);
    });
  }
  for (int i = spans[0].first; i < spans[0].second; ++i) fn(i);
  for (auto& t : pool) t.join();
}

// Monotone multiplicative gradient ascent in log space. Only steps that do
// not lower the computed objective are accepted, so the caller gets
// objective(final) >= objective(initial) in exact float comparison.
//
// Each move is confined to a factor of e^2 per coordinate. The objectives
// here contain differences of lgamma/psi terms that lose all precision at
// absurd argument magnitudes; a tight trust region keeps every evaluated
// trial in the regime where the computed objective is trustworthy, so a
// runaway step cannot be accepted on cancellation noise.
template <typename Obj, typename Grad>
double log_space_ascent(std::vector<double>& x, Obj&& objective, Grad&& gradient,
                        int max_iters, double shrink, double grad_tol) {
  double f = objective(x);
  const int k = static_cast<int>(x.size());
  std::vector<double> trial(k);
  for (int it = 0; it < max_iters; ++it) {
    std::vector<double> g = gradient(x);
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::fabs(v));
    if (gmax <= grad_tol) break;
    bool accepted = false;
    for (double step = 1.0; step > 1e-18; step *= shrink) {
      for (int i = 0; i < k; ++i) {
        double e = step * x[i] * g[i];
        e = std::clamp(e, -2.0, 2.0);
        trial[i] = std::max(x[i] * std::exp(e), 1e-300);
      }
      double ft = objective(trial);
      if (ft >= f) {
        x = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return f;
}

void apply_omega(const DepDocument& doc, DocVariational& var,
                 const std::vector<double>& s) {
  for (int n = 0; n < doc.size(); ++n) {
    if (doc.parent[n] == DepDocument::kRoot) {
      var.omega[n] = 1.0;
    } else {
      var.omega[n] = std::max(s[n], 1e-300);
    }
  }
}

// Per-topic coefficient whose softmax is the exact phi-row maximizer:
// expected log theta, the psi(nu) terms toward parent and children, the
// children's edge-normalizer penalty, and the word log-likelihood.
void phi_row_update(const DepDocument& doc, DocVariational& var,
                    const GlobalParams& global, const NuTables& nu_tables,
                    const ThetaTables& theta, const std::vector<double>& q,
                    int n, std::vector<double>& coef) {
  const int K = global.K();
  const int w = doc.words[n];
  for (int i = 0; i < K; ++i) {
    coef[i] = theta.elog_theta[i] + global.log_tau(i, w);
  }
  if (doc.parent[n] != DepDocument::kRoot) {
    const double* phi_parent = var.phi.row(doc.parent[n]);
    for (int j = 0; j < K; ++j) {
      const double c = phi_parent[j];
      const double* row = nu_tables.elog_pi.row(j);
      for (int i = 0; i < K; ++i) coef[i] += c * row[i];
    }
  }
  if (!doc.children[n].empty()) {
    double inv_omega_sum = 0.0;
    for (int ch : doc.children[n]) {
      inv_omega_sum += 1.0 / var.omega[ch];
      const double* phi_child = var.phi.row(ch);
      for (int i = 0; i < K; ++i) {
        const double* row = nu_tables.elog_pi.row(i);
        double acc = 0.0;
        for (int k = 0; k < K; ++k) acc += phi_child[k] * row[k];
        coef[i] += acc;
      }
    }
    for (int i = 0; i < K; ++i) coef[i] -= inv_omega_sum * q[i];
  }
  const double lse = log_sum_exp(coef.data(), K);
  double* row = var.phi.row(n);
  double total = 0.0;
  for (int i = 0; i < K; ++i) {
    row[i] = std::exp(coef[i] - lse);
    total += row[i];
  }
  for (int i = 0; i < K; ++i) row[i] /= total;
}

std::vector<double> gamma_gradient_impl(const DepDocument& doc,
                                        const DocVariational& var,
                                        const NuTables& nu_tables,
                                        const Hyperparams& hyper) {
  const int K = hyper.K();
  const int N = doc.size();
  ThetaTables theta = make_theta_tables(var.gamma);

  std::vector<double> phi_col_sum(K, 0.0);
  std::vector<double> t(K, 0.0);  // ratio-term coefficients
  for (int n = 0; n < N; ++n) {
    const double* phi_n = var.phi.row(n);
    for (int i = 0; i < K; ++i) phi_col_sum[i] += phi_n[i];
    if (doc.parent[n] == DepDocument::kRoot) continue;
    const double inv_omega = 1.0 / var.omega[n];
    const double* phi_parent = var.phi.row(doc.parent[n]);
    for (int j = 0; j < K; ++j) {
      const double c = inv_omega * phi_parent[j];
      const double* mean_row = nu_tables.nu_mean.row(j);
      for (int i = 0; i < K; ++i) t[i] += c * mean_row[i];
    }
  }

  double prior_total = 0.0;
  for (int i = 0; i < K; ++i) prior_total += hyper.beta_star * hyper.alpha_d[i];
  const double coef_total = prior_total + N - theta.gamma_sum;
  const double psi1_total = trigamma(theta.gamma_sum);

  double t_mean = 0.0;
  for (int i = 0; i < K; ++i) t_mean += theta.theta_mean[i] * t[i];

  std::vector<double> grad(K);
  for (int i = 0; i < K; ++i) {
    const double coef_i =
        hyper.beta_star * hyper.alpha_d[i] + phi_col_sum[i] - var.gamma[i];
    grad[i] = coef_i * trigamma(var.gamma[i]) - coef_total * psi1_total -
              (t[i] - t_mean) / theta.gamma_sum;
  }
  return grad;
}

// Returns the final bound value so the sweep loop can reuse it.
double update_gamma_impl(const DepDocument& doc, DocVariational& var,
                         const GlobalParams& global, const Hyperparams& hyper,
                         const EStepConfig& cfg, const NuTables& nu_tables) {
  DocVariational work = var;
  auto objective = [&](const std::vector<double>& g) {
    work.gamma = g;
    return document_elbo(doc, work, global, hyper, nu_tables).total;
  };
  auto gradient = [&](const std::vector<double>& g) {
    work.gamma = g;
    return gamma_gradient_impl(doc, work, nu_tables, hyper);
  };
  std::vector<double> gamma = var.gamma;
  double f = log_space_ascent(gamma, objective, gradient,
                              cfg.gamma_max_inner_iters, cfg.gamma_step_shrink,
                              1e-8);
  var.gamma = gamma;
  return f;
}

}  // namespace

void update_omega(const DepDocument& doc, DocVariational& var,
                  const GlobalParams& global) {
  apply_omega(doc, var, edge_normalizer(doc, var, global));
}

void update_phi(const DepDocument& doc, DocVariational& var,
                const GlobalParams& global, int n) {
  NuTables nu_tables = make_nu_tables(global.nu);
  ThetaTables theta = make_theta_tables(var.gamma);
  std::vector<double> q = edge_ratio(theta, nu_tables);
  std::vector<double> coef(global.K());
  phi_row_update(doc, var, global, nu_tables, theta, q, n, coef);
}

std::vector<double> gamma_gradient(const DepDocument& doc,
                                   const DocVariational& var,
                                   const GlobalParams& global,
                                   const Hyperparams& hyper) {
  return gamma_gradient_impl(doc, var, make_nu_tables(global.nu), hyper);
}

void update_gamma(const DepDocument& doc, DocVariational& var,
                  const GlobalParams& global, const Hyperparams& hyper,
                  const EStepConfig& cfg) {
  cfg.validate();
  update_gamma_impl(doc, var, global, hyper, cfg, make_nu_tables(global.nu));
}

ElboBreakdown estep_resume(const DepDocument& doc, DocVariational& var,
                           const GlobalParams& global, const Hyperparams& hyper,
                           const EStepConfig& cfg, const NuTables& nu_tables,
                           UpdateAudit* audit) {
  cfg.validate();
  const int K = global.K();
  const std::vector<int> order = topological_order(doc);
  std::vector<double> coef(K);

  auto elbo_now = [&] {
    return document_elbo(doc, var, global, hyper, nu_tables);
  };

  ElboBreakdown current = elbo_now();
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    const double sweep_start_total = current.total;

    ThetaTables theta = make_theta_tables(var.gamma);
    std::vector<double> q = edge_ratio(theta, nu_tables);
    apply_omega(doc, var, edge_normalizer(doc, var, q));
    if (audit) {
      ElboBreakdown e = elbo_now();
      audit->deltas.push_back({UpdateAudit::Kind::Omega, e.total - current.total});
      current = e;
    }

    for (int n : order) {
      phi_row_update(doc, var, global, nu_tables, theta, q, n, coef);
      if (audit) {
        ElboBreakdown e = elbo_now();
        audit->deltas.push_back({UpdateAudit::Kind::Phi, e.total - current.total});
        current = e;
      }
    }

    double new_total =
        update_gamma_impl(doc, var, global, hyper, cfg, nu_tables);
    if (audit) {
      ElboBreakdown e = elbo_now();
      audit->deltas.push_back({UpdateAudit::Kind::Gamma, e.total - current.total});
      current = e;
    } else {
      current.total = new_total;
    }

    const double rel = std::fabs(current.total - sweep_start_total) /
                       std::max(std::fabs(sweep_start_total), 1e-12);
    if (rel < cfg.tol) break;
  }
  ElboBreakdown final_breakdown = elbo_now();
  debug_validate(var, K);
  return final_breakdown;
}

std::pair<DocVariational, ElboBreakdown> estep_document(
    const DepDocument& doc, const GlobalParams& global, const Hyperparams& hyper,
    const EStepConfig& cfg, std::uint64_t seed) {
  DocVariational var = init_variational(doc, hyper, seed);
  NuTables nu_tables = make_nu_tables(global.nu);
  ElboBreakdown b = estep_resume(doc, var, global, hyper, cfg, nu_tables, nullptr);
  return {std::move(var), b};
}

void SuffStats::add(const SuffStats& o) {
  for (std::size_t i = 0; i < counts.data.size(); ++i) counts.data[i] += o.counts.data[i];
  for (std::size_t i = 0; i < A.data.size(); ++i) A.data[i] += o.A.data[i];
  for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] += o.C.data[i];
}

SuffStats doc_suff_stats(const DepDocument& doc, const DocVariational& var,
                         int K, int V) {
  SuffStats s;
  s.counts = Matrix(K, V);
  s.A = Matrix(K, K);
  s.C = Matrix(K, K);
  ThetaTables theta = make_theta_tables(var.gamma);
  std::vector<double> b(K, 0.0);  // sum over edges of phi_parent / omega
  for (int n = 0; n < doc.size(); ++n) {
    const double* phi_n = var.phi.row(n);
    const int w = doc.words[n];
    for (int i = 0; i < K; ++i) s.counts(i, w) += phi_n[i];
    if (doc.parent[n] == DepDocument::kRoot) continue;
    const double* phi_parent = var.phi.row(doc.parent[n]);
    const double inv_omega = 1.0 / var.omega[n];
    for (int j = 0; j < K; ++j) {
      b[j] += inv_omega * phi_parent[j];
      double* a_row = s.A.row(j);
      const double pj = phi_parent[j];
      for (int i = 0; i < K; ++i) a_row[i] += pj * phi_n[i];
    }
  }
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) s.C(j, i) = b[j] * theta.theta_mean[i];
  }
  return s;
}

SuffStats merge_suff_stats(const Corpus& corpus,
                           const std::vector<DocVariational>& states, int K,
                           int V) {
  const std::size_t n = corpus.documents.size();
  return pairwise_reduce<SuffStats>(
      0, n,
      [&](std::size_t d) {
        return doc_suff_stats(corpus.documents[d], states[d], K, V);
      },
      [](SuffStats left, SuffStats right) {
        left.add(right);
        return left;
      });
}

Matrix update_tau_from_counts(const Matrix& counts) {
  const int K = counts.rows;
  const int V = counts.cols;
  const double floor = 1e-10;
  Matrix log_tau(K, V);
  for (int i = 0; i < K; ++i) {
    const double* row = counts.row(i);
    const double denom = pairwise_sum(row, V) + V * floor;
    for (int v = 0; v < V; ++v) {
      log_tau(i, v) = std::log((row[v] + floor) / denom);
    }
  }
  return log_tau;
}

Matrix update_tau(const Corpus& corpus,
                  const std::vector<DocVariational>& states, int K, int V) {
  return update_tau_from_counts(merge_suff_stats(corpus, states, K, V).counts);
}

double nu_row_objective(const double* a_row, const double* c_row,
                        const std::vector<double>& nu_row, double alpha_t) {
  const int K = static_cast<int>(nu_row.size());
  double nu_sum = 0.0;
  for (int i = 0; i < K; ++i) nu_sum += nu_row[i];
  const double psi_sum = digamma(nu_sum);

  double obj = log_gamma(K * alpha_t) - K * log_gamma(alpha_t) - log_gamma(nu_sum);
  double c_dot_mean = 0.0;
  for (int i = 0; i < K; ++i) c_dot_mean += c_row[i] * (nu_row[i] / nu_sum);
  obj -= c_dot_mean;
  for (int i = 0; i < K; ++i) {
    const double elog = digamma(nu_row[i]) - psi_sum;
    obj += (a_row[i] + alpha_t - nu_row[i]) * elog + log_gamma(nu_row[i]);
  }
  return obj;
}

std::vector<double> nu_row_gradient(const double* a_row, const double* c_row,
                                    const std::vector<double>& nu_row,
                                    double alpha_t) {
  const int K = static_cast<int>(nu_row.size());
  double nu_sum = 0.0, a_sum = 0.0;
  for (int i = 0; i < K; ++i) {
    nu_sum += nu_row[i];
    a_sum += a_row[i];
  }
  double c_dot_mean = 0.0;
  for (int i = 0; i < K; ++i) c_dot_mean += c_row[i] * (nu_row[i] / nu_sum);
  const double coef_total = a_sum + K * alpha_t - nu_sum;
  const double psi1_sum = trigamma(nu_sum);
  std::vector<double> grad(K);
  for (int i = 0; i < K; ++i) {
    const double coef_i = a_row[i] + alpha_t - nu_row[i];
    grad[i] = coef_i * trigamma(nu_row[i]) - coef_total * psi1_sum -
              (c_row[i] - c_dot_mean) / nu_sum;
  }
  return grad;
}

Matrix update_nu_from_stats(const SuffStats& stats, const Matrix& nu_in,
                            double alpha_t, const EStepConfig& cfg) {
  cfg.validate();
  const int K = nu_in.rows;
  Matrix nu = nu_in;
  std::vector<double> row(K);
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) row[i] = nu(j, i);
    const double* a_row = stats.A.row(j);
    const double* c_row = stats.C.row(j);
    log_space_ascent(
        row,
        [&](const std::vector<double>& x) {
          return nu_row_objective(a_row, c_row, x, alpha_t);
        },
        [&](const std::vector<double>& x) {
          return nu_row_gradient(a_row, c_row, x, alpha_t);
        },
        cfg.gamma_max_inner_iters, cfg.gamma_step_shrink, 1e-8);
    for (int i = 0; i < K; ++i) nu(j, i) = row[i];
  }
  return nu;
}

Matrix update_nu(const Corpus& corpus, const std::vector<DocVariational>& states,
                 const GlobalParams& global, const Hyperparams& hyper,
                 const EStepConfig& cfg) {
  SuffStats stats = merge_suff_stats(corpus, states, global.K(), global.V());
  return update_nu_from_stats(stats, global.nu, hyper.alpha_t, cfg);
}

double nu_prior_entropy(const Matrix& nu, double alpha_t) {
  const int K = nu.rows;
  double total = 0.0;
  for (int j = 0; j < K; ++j) {
    const double* row = nu.row(j);
    double nu_sum = 0.0;
    for (int i = 0; i < K; ++i) nu_sum += row[i];
    const double psi_sum = digamma(nu_sum);
    double acc = log_gamma(K * alpha_t) - K * log_gamma(alpha_t) - log_gamma(nu_sum);
    for (int i = 0; i < K; ++i) {
      acc += (alpha_t - row[i]) * (digamma(row[i]) - psi_sum) + log_gamma(row[i]);
    }
    total += acc;
  }
  return total;
}

TraceRow corpus_elbo_row(const Corpus& corpus,
                         const std::vector<DocVariational>& states,
                         const GlobalParams& global, const Hyperparams& hyper,
                         int worker_count) {
  const int n = static_cast<int>(corpus.documents.size());
  NuTables nu_tables = make_nu_tables(global.nu);
  std::vector<ElboBreakdown> b(n);
  parallel_over(n, worker_count, [&](int d) {
    b[d] = document_elbo(corpus.documents[d], states[d], global, hyper, nu_tables);
  });

  auto field_sum = [&](double ElboBreakdown::* field) {
    std::vector<double> xs(n);
    for (int d = 0; d < n; ++d) xs[d] = b[d].*field;
    return pairwise_sum(xs);
  };

  TraceRow row;
  row.prior = field_sum(&ElboBreakdown::prior_cross_entropy);
  row.theta = field_sum(&ElboBreakdown::theta_alloc);
  row.transition = field_sum(&ElboBreakdown::transition);
  row.omega = field_sum(&ElboBreakdown::omega_bound);
  row.words = field_sum(&ElboBreakdown::word_likelihood);
  row.dir_entropy = field_sum(&ElboBreakdown::dirichlet_entropy);
  row.phi_entropy = field_sum(&ElboBreakdown::phi_entropy);
  row.nu_terms = nu_prior_entropy(global.nu, hyper.alpha_t);
  row.elbo = row.prior + row.theta + row.transition + row.omega + row.words +
             row.dir_entropy + row.phi_entropy + row.nu_terms;
  return row;
}

namespace {

void check_row_finite(const TraceRow& row) {
  struct Named {
    const char* name;
    double value;
  };
  const Named fields[] = {
      {"prior_cross_entropy", row.prior}, {"theta_alloc", row.theta},
      {"transition", row.transition},     {"omega_bound", row.omega},
      {"word_likelihood", row.words},     {"dirichlet_entropy", row.dir_entropy},
      {"phi_entropy", row.phi_entropy},   {"nu_terms", row.nu_terms},
      {"elbo", row.elbo},
  };
  for (const auto& f : fields) {
    if (!std::isfinite(f.value)) {
      throw NumericalError(f.name, "non-finite corpus bound term");
    }
  }
}

}  // namespace

std::pair<GlobalParams, TrainTrace> train(const Corpus& corpus,
                                          const Hyperparams& hyper,
                                          const TrainConfig& cfg,
                                          UpdateAudit* audit) {
  cfg.validate();
  if (corpus.documents.empty()) {
    throw std::invalid_argument("train: corpus has no documents");
  }
  const int K = hyper.K();
  const int V = corpus.vocabulary.size();
  const int n_docs = static_cast<int>(corpus.documents.size());

  GlobalParams global = init_global(K, V, hyper.alpha_t, mix_seed(cfg.seed, 0));
  std::vector<DocVariational> states(n_docs);
  for (int d = 0; d < n_docs; ++d) {
    states[d] = init_variational(corpus.documents[d], hyper,
                                 mix_seed(cfg.seed, 1 + d));
  }

  if (audit) {
    audit->initial_corpus_elbo =
        corpus_elbo_row(corpus, states, global, hyper, cfg.worker_count).elbo;
  }

  TrainTrace trace;
  double prev_elbo = 0.0;
  for (int iter = 0; iter < cfg.max_em_iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();

    // E-step: documents are independent given the globals; per-document
    // audit buffers are concatenated in document order afterwards.
    NuTables nu_tables = make_nu_tables(global.nu);
    std::vector<UpdateAudit> doc_audits(audit ? n_docs : 0);
    parallel_over(n_docs, cfg.worker_count, [&](int d) {
      estep_resume(corpus.documents[d], states[d], global, hyper, cfg.estep,
                   nu_tables, audit ? &doc_audits[d] : nullptr);
    });
    if (audit) {
      for (int d = 0; d < n_docs; ++d) {
        audit->deltas.insert(audit->deltas.end(), doc_audits[d].deltas.begin(),
                             doc_audits[d].deltas.end());
      }
    }

    // M-step.
    SuffStats stats = merge_suff_stats(corpus, states, K, V);
    Matrix new_log_tau = update_tau_from_counts(stats.counts);
    if (audit) {
      std::vector<double> contrib(static_cast<std::size_t>(K) * V);
      for (std::size_t i = 0; i < contrib.size(); ++i) {
        contrib[i] =
            stats.counts.data[i] * (new_log_tau.data[i] - global.log_tau.data[i]);
      }
      audit->deltas.push_back({UpdateAudit::Kind::Tau, pairwise_sum(contrib)});
    }
    global.log_tau = std::move(new_log_tau);

    double nu_delta = 0.0;
    {
      Matrix new_nu =
          update_nu_from_stats(stats, global.nu, hyper.alpha_t, cfg.estep);
      if (audit) {
        std::vector<double> old_row(K), new_row(K);
        for (int j = 0; j < K; ++j) {
          for (int i = 0; i < K; ++i) {
            old_row[i] = global.nu(j, i);
            new_row[i] = new_nu(j, i);
          }
          nu_delta += nu_row_objective(stats.A.row(j), stats.C.row(j), new_row,
                                       hyper.alpha_t) -
                      nu_row_objective(stats.A.row(j), stats.C.row(j), old_row,
                                       hyper.alpha_t);
        }
        audit->deltas.push_back({UpdateAudit::Kind::Nu, nu_delta});
      }
      global.nu = std::move(new_nu);
    }
    debug_validate(global);

    TraceRow row = corpus_elbo_row(corpus, states, global, hyper, cfg.worker_count);
    check_row_finite(row);
    row.iter = iter;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    trace.rows.push_back(row);

    if (iter > 0) {
      const double slack = 1e-7 * std::max(std::fabs(prev_elbo), 1.0);
      if (row.elbo < prev_elbo - slack) {
        throw NumericalError("elbo", "corpus bound decreased across EM iterations");
      }
      const double rel = std::fabs(row.elbo - prev_elbo) /
                         std::max(std::fabs(prev_elbo), 1e-12);
      if (rel < cfg.em_tol) {
        prev_elbo = row.elbo;
        break;
      }
    }
    prev_elbo = row.elbo;
  }
  return {std::move(global), std::move(trace)};
}

double heldout_bound(const GlobalParams& global, const Hyperparams& hyper,
                     const DepDocument& doc, const EStepConfig& cfg,
                     std::uint64_t seed) {
  if (doc.size() == 0) return 0.0;
  auto [var, breakdown] = estep_document(doc, global, hyper, cfg, seed);
  return breakdown.total / doc.size();
}

void write_trace_csv(const TrainTrace& trace, std::ostream& out) {
  out << "iter,elbo,prior,theta,transition,omega,words,dir_entropy,"
         "phi_entropy,nu_terms,seconds\n";
  for (const TraceRow& r : trace.rows) {
    char sec[32];
    std::snprintf(sec, sizeof(sec), "%.6f", r.seconds);
    out << r.iter << ',' << fmt17(r.elbo) << ',' << fmt17(r.prior) << ','
        << fmt17(r.theta) << ',' << fmt17(r.transition) << ',' << fmt17(r.omega)
        << ',' << fmt17(r.words) << ',' << fmt17(r.dir_entropy) << ','
        << fmt17(r.phi_entropy) << ',' << fmt17(r.nu_terms) << ',' << sec
        << "\n";
  }
}

double UpdateAudit::min_delta() const {
  double m = 0.0;
  bool first = true;
  for (const Delta& d : deltas) {
    if (first || d.delta < m) m = d.delta;
    first = false;
  }
  return m;
}

const char* UpdateAudit::kind_name(Kind k) {
  switch (k) {
    case Kind::Omega: return "omega";
    case Kind::Phi: return "phi";
    case Kind::Gamma: return "gamma";
    case Kind::Tau: return "tau";
    case Kind::Nu: return "nu";
  }
  return "?";
}

}  // namespace treestm
