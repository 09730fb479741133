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
#include "treestm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "treestm/errors.hpp"
#include "treestm/rng.hpp"
#include "treestm/special_functions.hpp"

namespace treestm {

namespace {

constexpr long kMcChunk = 1 << 16;

// Running (count, mean, M2) accumulator and Chan's combination rule; chunks
// are combined in index order so the estimate is schedule-independent.
struct Welford {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++count;
    double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }
  void merge(const Welford& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    double d = o.mean - mean;
    long total = count + o.count;
    mean += d * (double(o.count) / total);
    m2 += o.m2 + d * d * (double(count) * o.count / total);
    count = total;
  }
};

}  // namespace

McEstimate mc_elbo_estimate(const DepDocument& doc, const DocVariational& var,
                            const GlobalParams& global, const Hyperparams& hyper,
                            long n_samples, std::uint64_t seed) {
  if (n_samples < 1) {
    throw std::invalid_argument("mc_elbo_estimate: n_samples must be >= 1");
  }
  const int K = global.K();
  const int N = doc.size();

  // Constant parts of log p(theta) - log q(theta): only the
  // (prior_i - gamma_i) * log theta_i part varies with the sample.
  std::vector<double> prior_minus_gamma(K);
  double density_const = 0.0;
  {
    double prior_sum = 0.0, gamma_sum = 0.0;
    for (int i = 0; i < K; ++i) {
      const double a = hyper.beta_star * hyper.alpha_d[i];
      prior_sum += a;
      gamma_sum += var.gamma[i];
      prior_minus_gamma[i] = a - var.gamma[i];
      density_const += log_gamma(var.gamma[i]) - log_gamma(a);
    }
    density_const += log_gamma(prior_sum) - log_gamma(gamma_sum);
  }

  // log phi with 0 entries mapped to -inf; z ~ phi never lands on them.
  Matrix log_phi(N, K);
  for (int n = 0; n < N; ++n) {
    for (int i = 0; i < K; ++i) {
      double p = var.phi(n, i);
      log_phi(n, i) = p > 0.0 ? std::log(p) : -HUGE_VAL;
    }
  }
  std::vector<double> log_omega(N), inv_omega(N);
  for (int n = 0; n < N; ++n) {
    log_omega[n] = std::log(var.omega[n]);
    inv_omega[n] = 1.0 / var.omega[n];
  }
  std::vector<double> nu_rows(static_cast<std::size_t>(K) * K);
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) nu_rows[j * K + i] = global.nu(j, i);
  }

  std::vector<double> theta(K), log_theta(K);
  Matrix pi(K, K);
  std::vector<int> z(N);

  Welford total_acc;
  const long n_chunks = (n_samples + kMcChunk - 1) / kMcChunk;
  for (long chunk = 0; chunk < n_chunks; ++chunk) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(chunk)));
    const long lo = chunk * kMcChunk;
    const long hi = std::min(n_samples, lo + kMcChunk);
    Welford acc;
    for (long s = lo; s < hi; ++s) {
      rng.dirichlet(var.gamma, theta);
      for (int i = 0; i < K; ++i) log_theta[i] = std::log(theta[i]);
      for (int j = 0; j < K; ++j) {
        double* pi_row = pi.row(j);
        double total = 0.0;
        for (int i = 0; i < K; ++i) {
          double g = rng.gamma(nu_rows[j * K + i]);
          if (g < 1e-300) g = 1e-300;
          pi_row[i] = g;
          total += g;
        }
        for (int i = 0; i < K; ++i) pi_row[i] /= total;
      }
      for (int n = 0; n < N; ++n) z[n] = rng.categorical(var.phi.row(n), K);

      // E_q of this integrand reproduces the bound: the theta prior, the
      // topic draw of every word, the parent->child transition with its
      // auxiliary normalizer bound on non-root words, the word likelihood,
      // and the entropy terms as -log q.
      double value = density_const;
      for (int i = 0; i < K; ++i) value += prior_minus_gamma[i] * log_theta[i];
      for (int n = 0; n < N; ++n) {
        value += log_theta[z[n]];
        value += global.log_tau(z[n], doc.words[n]);
        value -= log_phi(n, z[n]);
        const int p = doc.parent[n];
        if (p == DepDocument::kRoot) continue;
        const double* pi_row = pi.row(z[p]);
        value += std::log(pi_row[z[n]]);
        double edge = 0.0;
        for (int i = 0; i < K; ++i) edge += theta[i] * pi_row[i];
        value -= edge * inv_omega[n] + log_omega[n] - 1.0;
      }
      acc.push(value);
    }
    total_acc.merge(acc);
  }

  McEstimate est;
  est.mean = total_acc.mean;
  est.n_samples = total_acc.count;
  est.stderr_ = total_acc.count > 1
                    ? std::sqrt(total_acc.m2 / (total_acc.count - 1) /
                                total_acc.count)
                    : 0.0;
  return est;
}

std::vector<double> finite_diff(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff: h must be > 0");
  std::vector<double> grad(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double step = h * std::max(std::fabs(x[i]), 1.0);
    probe[i] = x[i] + step;
    const double fp = f(probe);
    probe[i] = x[i] - step;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("finite_diff", "non-finite objective at probe point");
    }
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

SyntheticCorpus sample_corpus(const Matrix& true_tau, const Matrix& true_pi,
                              const Hyperparams& hyper, int n_docs,
                              double mean_length, std::uint64_t seed) {
  const int K = true_tau.rows;
  const int V = true_tau.cols;
  if (true_pi.rows != K || true_pi.cols != K || hyper.K() != K) {
    throw std::invalid_argument("sample_corpus: dimension mismatch");
  }
  if (n_docs < 1) throw std::invalid_argument("sample_corpus: n_docs must be >= 1");
  if (!(mean_length >= 1.0)) {
    throw std::invalid_argument("sample_corpus: mean_length must be >= 1");
  }

  SyntheticCorpus synth;
  for (int v = 0; v < V; ++v) synth.corpus.vocabulary.add("w" + std::to_string(v));

  std::vector<double> prior(K);
  for (int i = 0; i < K; ++i) prior[i] = hyper.beta_star * hyper.alpha_d[i];

  Rng rng(seed);
  std::vector<double> theta(K), edge_prob(K);
  for (int d = 0; d < n_docs; ++d) {
    const int n_words = 1 + rng.poisson(mean_length - 1.0);
    DepDocument doc;
    doc.words.resize(n_words);
    doc.parent.resize(n_words);
    std::vector<int> zs(n_words);

    doc.parent[0] = DepDocument::kRoot;
    for (int n = 1; n < n_words; ++n) doc.parent[n] = rng.uniform_int(n);

    rng.dirichlet(prior, theta);
    for (int n = 0; n < n_words; ++n) {
      if (doc.parent[n] == DepDocument::kRoot) {
        zs[n] = rng.categorical(theta.data(), K);
      } else {
        const double* pi_row = true_pi.row(zs[doc.parent[n]]);
        double total = 0.0;
        for (int i = 0; i < K; ++i) {
          edge_prob[i] = theta[i] * pi_row[i];
          total += edge_prob[i];
        }
        for (int i = 0; i < K; ++i) edge_prob[i] /= total;
        zs[n] = rng.categorical(edge_prob.data(), K);
      }
      doc.words[n] = rng.categorical(true_tau.row(zs[n]), V);
    }
    doc.rebuild_children();
    synth.corpus.documents.push_back(std::move(doc));
    synth.true_z.push_back(std::move(zs));
  }
  return synth;
}

void write_truth_sidecar(const SyntheticCorpus& synth, std::ostream& out) {
  for (std::size_t d = 0; d < synth.true_z.size(); ++d) {
    for (std::size_t n = 0; n < synth.true_z[d].size(); ++n) {
      out << d << ' ' << n << ' ' << synth.true_z[d][n] << "\n";
    }
  }
}

std::pair<std::vector<int>, double> match_topics(const Matrix& estimated_tau,
                                                 const Matrix& true_tau) {
  const int K = true_tau.rows;
  const int V = true_tau.cols;
  if (estimated_tau.rows != K || estimated_tau.cols != V) {
    throw std::invalid_argument("match_topics: dimension mismatch");
  }
  if (K > 8) {
    throw std::invalid_argument("match_topics: only K <= 8 supported");
  }

  // tv(a, b) for every (estimated row a, true row b) pair, then exhaustive
  // assignment search.
  Matrix tv(K, K);
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      double acc = 0.0;
      for (int v = 0; v < V; ++v) {
        acc += std::fabs(estimated_tau(a, v) - true_tau(b, v));
      }
      tv(a, b) = 0.5 * acc;
    }
  }

  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_mean = HUGE_VAL;
  do {
    double acc = 0.0;
    for (int b = 0; b < K; ++b) acc += tv(perm[b], b);
    acc /= K;
    if (acc < best_mean) {
      best_mean = acc;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_mean};
}

}  // namespace treestm
