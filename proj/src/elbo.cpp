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
#include "treestm/elbo.hpp"

#include <cmath>
#include <stdexcept>

#include "treestm/special_functions.hpp"

namespace treestm {

NuTables make_nu_tables(const Matrix& nu) {
  const int K = nu.rows;
  NuTables t;
  t.elog_pi = Matrix(K, K);
  t.nu_mean = Matrix(K, K);
  t.row_sum.resize(K);
  for (int j = 0; j < K; ++j) {
    const double* row = nu.row(j);
    double total = 0.0;
    for (int i = 0; i < K; ++i) total += row[i];
    t.row_sum[j] = total;
    double psi_total = digamma(total);
    for (int i = 0; i < K; ++i) {
      t.elog_pi(j, i) = digamma(row[i]) - psi_total;
      t.nu_mean(j, i) = row[i] / total;
    }
  }
  return t;
}

ThetaTables make_theta_tables(const std::vector<double>& gamma) {
  const int K = static_cast<int>(gamma.size());
  ThetaTables t;
  t.elog_theta.resize(K);
  t.theta_mean.resize(K);
  for (double g : gamma) t.gamma_sum += g;
  double psi_total = digamma(t.gamma_sum);
  for (int i = 0; i < K; ++i) {
    t.elog_theta[i] = digamma(gamma[i]) - psi_total;
    t.theta_mean[i] = gamma[i] / t.gamma_sum;
  }
  return t;
}

std::vector<double> edge_ratio(const ThetaTables& theta, const NuTables& nu) {
  const int K = static_cast<int>(theta.theta_mean.size());
  std::vector<double> q(K);
  for (int j = 0; j < K; ++j) {
    const double* mean_row = nu.nu_mean.row(j);
    double acc = 0.0;
    for (int i = 0; i < K; ++i) acc += theta.theta_mean[i] * mean_row[i];
    q[j] = acc;
  }
  return q;
}

std::vector<double> edge_normalizer(const DepDocument& doc,
                                    const DocVariational& var,
                                    const std::vector<double>& q) {
  const int N = doc.size();
  const int K = static_cast<int>(q.size());
  std::vector<double> s(N, 1.0);
  for (int n = 0; n < N; ++n) {
    if (doc.parent[n] == DepDocument::kRoot) continue;
    const double* phi_parent = var.phi.row(doc.parent[n]);
    double acc = 0.0;
    for (int j = 0; j < K; ++j) acc += phi_parent[j] * q[j];
    s[n] = acc;
  }
  return s;
}

std::vector<double> edge_normalizer(const DepDocument& doc,
                                    const DocVariational& var,
                                    const GlobalParams& global) {
  NuTables nu = make_nu_tables(global.nu);
  ThetaTables theta = make_theta_tables(var.gamma);
  return edge_normalizer(doc, var, edge_ratio(theta, nu));
}

ElboBreakdown document_elbo(const DepDocument& doc, const DocVariational& var,
                            const GlobalParams& global, const Hyperparams& hyper,
                            const NuTables& nu_tables) {
  const int K = global.K();
  const int N = doc.size();
  if (var.K() != K || var.N() != N || hyper.K() != K) {
    throw std::invalid_argument("document_elbo: dimension mismatch");
  }

  ThetaTables theta = make_theta_tables(var.gamma);
  ElboBreakdown b;

  // Dirichlet prior cross-entropy and entropy of q(theta). Written so that
  // at gamma = beta_star*alpha_d the two cancel exactly term by term.
  double prior_sum = 0.0;
  for (int i = 0; i < K; ++i) {
    double a = hyper.beta_star * hyper.alpha_d[i];
    prior_sum += a;
    b.prior_cross_entropy += -log_gamma(a) + (a - 1.0) * theta.elog_theta[i];
    b.dirichlet_entropy +=
        log_gamma(var.gamma[i]) - (var.gamma[i] - 1.0) * theta.elog_theta[i];
  }
  b.prior_cross_entropy += log_gamma(prior_sum);
  b.dirichlet_entropy -= log_gamma(theta.gamma_sum);

  if (N > 0) {
    std::vector<double> q = edge_ratio(theta, nu_tables);
    std::vector<double> s = edge_normalizer(doc, var, q);
    for (int n = 0; n < N; ++n) {
      const double* phi_n = var.phi.row(n);
      const int w = doc.words[n];
      if (w < 0 || w >= global.V()) {
        throw std::invalid_argument("document_elbo: word id out of range");
      }
      for (int i = 0; i < K; ++i) {
        const double p = phi_n[i];
        b.theta_alloc += p * theta.elog_theta[i];
        b.word_likelihood += p * global.log_tau(i, w);
        if (p > 1e-300) b.phi_entropy -= p * std::log(p);
      }
      if (doc.parent[n] != DepDocument::kRoot) {
        const double* phi_parent = var.phi.row(doc.parent[n]);
        double trans = 0.0;
        for (int j = 0; j < K; ++j) {
          const double* elog_row = nu_tables.elog_pi.row(j);
          double inner = 0.0;
          for (int i = 0; i < K; ++i) inner += phi_n[i] * elog_row[i];
          trans += phi_parent[j] * inner;
        }
        b.transition += trans;
        b.omega_bound -= s[n] / var.omega[n] + std::log(var.omega[n]) - 1.0;
      }
    }
  }

  b.total = b.component_sum();
  return b;
}

ElboBreakdown document_elbo(const DepDocument& doc, const DocVariational& var,
                            const GlobalParams& global,
                            const Hyperparams& hyper) {
  return document_elbo(doc, var, global, hyper, make_nu_tables(global.nu));
}

}  // namespace treestm
