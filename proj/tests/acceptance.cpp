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

// Acceptance suite: one line per criterion, exit code = number of failures.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "treestm/checks.hpp"
#include "treestm/corpus.hpp"
#include "treestm/elbo.hpp"
#include "treestm/inference.hpp"
#include "treestm/model_state.hpp"
#include "treestm/oracle.hpp"
#include "treestm/rng.hpp"

using namespace treestm;

namespace {

int failures = 0;

void report(int index, const char* name, bool passed, const std::string& detail) {
  std::printf("[%d/8] %-24s %s  %s\n", index, name, passed ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!passed) ++failures;
}

// ---- criterion 1: ELBO vs Monte-Carlo oracle on 20 seeded states ---------

void criterion_elbo_mc_agreement() {
  const long samples = 1000000;
  int passed = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int K = 2 + t % 2;
    const int N = 1 + t % 6;
    RandomState st = make_random_state(K, N, mix_seed(20260801, t));
    ElboBreakdown b = document_elbo(st.doc, st.var, st.global, st.hyper);
    McEstimate mc = mc_elbo_estimate(st.doc, st.var, st.global, st.hyper,
                                     samples, mix_seed(20260802, t));
    double gap = std::fabs(b.total - mc.mean);
    double ratio = mc.stderr_ > 0.0 ? gap / mc.stderr_ : 0.0;
    worst_ratio = std::max(worst_ratio, ratio);
    if (gap <= 3.0 * mc.stderr_) ++passed;
  }
  std::ostringstream ss;
  ss << passed << "/20 states within 3 stderr at 1e6 samples; worst gap "
     << worst_ratio << " stderr";
  report(1, "elbo_mc_agreement", passed == 20, ss.str());
}

// ---- criterion 2: analytic gradients vs central finite differences -------

void criterion_gradients() {
  double worst_gamma = 0.0, worst_nu = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int K = 2 + t % 2;

    // gamma gradient on a random state
    RandomState st = make_random_state(K, 3 + t % 4, mix_seed(20260811, t));
    std::vector<double> analytic =
        gamma_gradient(st.doc, st.var, st.global, st.hyper);
    DocVariational work = st.var;
    auto gamma_objective = [&](const std::vector<double>& g) {
      work.gamma = g;
      return document_elbo(st.doc, work, st.global, st.hyper).total;
    };
    std::vector<double> fd = finite_diff(gamma_objective, st.var.gamma, 1e-5);
    for (int i = 0; i < K; ++i) {
      worst_gamma = std::max(worst_gamma, std::fabs(analytic[i] - fd[i]) /
                                              std::max(std::fabs(fd[i]), 1e-6));
    }

    // nu row gradients against the full corpus objective
    Corpus corpus;
    std::vector<DocVariational> states;
    for (int v = 0; v < 6; ++v) corpus.vocabulary.add("w" + std::to_string(v));
    for (int d = 0; d < 3; ++d) {
      RandomState sd = make_random_state(K, 2 + (t + d) % 3,
                                         mix_seed(20260812, 10 * t + d));
      corpus.documents.push_back(sd.doc);
      states.push_back(sd.var);
    }
    SuffStats stats = merge_suff_stats(corpus, states, K, 6);
    for (int j = 0; j < K; ++j) {
      std::vector<double> nu_row(K);
      for (int i = 0; i < K; ++i) nu_row[i] = st.global.nu(j, i);
      std::vector<double> nu_analytic = nu_row_gradient(
          stats.A.row(j), stats.C.row(j), nu_row, st.hyper.alpha_t);
      auto nu_objective = [&](const std::vector<double>& row) {
        GlobalParams probe = st.global;
        for (int i = 0; i < K; ++i) probe.nu(j, i) = row[i];
        double acc = nu_prior_entropy(probe.nu, st.hyper.alpha_t);
        for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
          acc += document_elbo(corpus.documents[d], states[d], probe, st.hyper)
                     .total;
        }
        return acc;
      };
      std::vector<double> nu_fd = finite_diff(nu_objective, nu_row, 1e-5);
      for (int i = 0; i < K; ++i) {
        worst_nu = std::max(worst_nu, std::fabs(nu_analytic[i] - nu_fd[i]) /
                                          std::max(std::fabs(nu_fd[i]), 1e-6));
      }
    }
  }
  std::ostringstream ss;
  ss << "max relative error: gamma " << worst_gamma << ", nu " << worst_nu
     << " (limit 1e-5)";
  report(2, "gradient_correctness", worst_gamma <= 1e-5 && worst_nu <= 1e-5,
         ss.str());
}

// ---- criterion 3: omega closed form -------------------------------------

void criterion_omega() {
  double worst_fd = 0.0, worst_value = 0.0;
  for (int t = 0; t < 10; ++t) {
    RandomState st = make_random_state(2 + t % 2, 2 + t % 5, mix_seed(20260821, t));
    std::vector<double> s = edge_normalizer(st.doc, st.var, st.global);
    update_omega(st.doc, st.var, st.global);
    for (int n = 0; n < st.doc.size(); ++n) {
      if (st.doc.parent[n] == DepDocument::kRoot) continue;
      auto objective = [&](const std::vector<double>& w) {
        DocVariational probe = st.var;
        probe.omega[n] = w[0];
        return document_elbo(st.doc, probe, st.global, st.hyper).total;
      };
      std::vector<double> fd = finite_diff(objective, {st.var.omega[n]}, 1e-6);
      worst_fd = std::max(worst_fd, std::fabs(fd[0]));
      double per_word =
          -(s[n] / st.var.omega[n] + std::log(st.var.omega[n]) - 1.0);
      worst_value = std::max(worst_value, std::fabs(per_word + std::log(s[n])));
    }
  }
  std::ostringstream ss;
  ss << "max |d total/d omega| " << worst_fd << " (limit 1e-6); max value residual "
     << worst_value << " (limit 1e-10)";
  report(3, "omega_closed_form", worst_fd <= 1e-6 && worst_value <= 1e-10,
         ss.str());
}

// ---- criterion 4: monotonicity audit of a full training run --------------

void criterion_monotonicity() {
  const int K = 3, V = 25;
  Rng rng(mix_seed(20260831, 0));
  Matrix true_tau(K, V), true_pi(K, K);
  for (int i = 0; i < K; ++i) {
    double total = 0.0;
    for (int v = 0; v < V; ++v) {
      true_tau(i, v) = rng.uniform_pos();
      total += true_tau(i, v);
    }
    for (int v = 0; v < V; ++v) true_tau(i, v) /= total;
  }
  for (int j = 0; j < K; ++j) {
    double total = 0.0;
    for (int i = 0; i < K; ++i) {
      true_pi(j, i) = rng.uniform_pos();
      total += true_pi(j, i);
    }
    for (int i = 0; i < K; ++i) true_pi(j, i) /= total;
  }
  Hyperparams hyper;
  hyper.alpha_d = {1.0, 1.0, 1.0};
  SyntheticCorpus synth =
      sample_corpus(true_tau, true_pi, hyper, 200, 10.0, mix_seed(20260831, 1));

  TrainConfig cfg;
  cfg.seed = mix_seed(20260831, 2);
  UpdateAudit audit;
  auto [global, trace] = train(synth.corpus, hyper, cfg, &audit);

  double min_delta = audit.min_delta();

  // cumulative reconstruction must track the per-iteration recomputation
  double cum = audit.initial_corpus_elbo;
  std::size_t iter = 0;
  double worst_drift = 0.0;
  for (const auto& d : audit.deltas) {
    cum += d.delta;
    if (d.kind == UpdateAudit::Kind::Nu) {
      if (iter < trace.rows.size()) {
        double drift = std::fabs(cum - trace.rows[iter].elbo) /
                       std::max(1.0, std::fabs(trace.rows[iter].elbo));
        worst_drift = std::max(worst_drift, drift);
      }
      ++iter;
    }
  }

  std::ostringstream ss;
  ss << audit.deltas.size() << " coordinate updates over " << trace.rows.size()
     << " EM iterations; min delta " << min_delta
     << " (limit -1e-12); cumulative-vs-recomputed drift " << worst_drift
     << " (limit 1e-7)";
  report(4, "monotonicity_audit",
         min_delta >= -1e-12 && worst_drift <= 1e-7 &&
             iter == trace.rows.size(),
         ss.str());
}

// ---- criterion 5: algebraic identities ----------------------------------

void criterion_identities() {
  double worst_k1 = 0.0, worst_n0 = 0.0;
  for (int t = 0; t < 10; ++t) {
    RandomState st = make_random_state(1, 1 + t % 7, mix_seed(20260841, t));
    update_omega(st.doc, st.var, st.global);
    ElboBreakdown b = document_elbo(st.doc, st.var, st.global, st.hyper);
    double expected = 0.0;
    for (int n = 0; n < st.doc.size(); ++n) {
      expected += st.global.log_tau(0, st.doc.words[n]);
    }
    worst_k1 = std::max(worst_k1, std::fabs(b.total - expected));

    RandomState sn = make_random_state(2 + t % 3, 1, mix_seed(20260842, t));
    const int K = sn.hyper.K();
    DepDocument empty;
    DocVariational var;
    var.gamma.resize(K);
    for (int i = 0; i < K; ++i) {
      var.gamma[i] = sn.hyper.beta_star * sn.hyper.alpha_d[i];
    }
    var.phi = Matrix(0, K);
    ElboBreakdown zero = document_elbo(empty, var, sn.global, sn.hyper);
    worst_n0 = std::max(worst_n0, std::fabs(zero.total));
  }
  std::ostringstream ss;
  ss << "max |K=1 residual| " << worst_k1 << ", max |N=0 residual| " << worst_n0
     << " (limit 1e-12)";
  report(5, "algebraic_identities", worst_k1 <= 1e-12 && worst_n0 <= 1e-12,
         ss.str());
}

// ---- criterion 6: synthetic recovery ------------------------------------

void criterion_recovery() {
  const int K = 2, V = 20;
  Matrix true_tau(K, V, 0.0), true_pi(K, K);
  for (int v = 0; v < 10; ++v) true_tau(0, v) = 0.1;   // words 0..9
  for (int v = 10; v < 20; ++v) true_tau(1, v) = 0.1;  // words 10..19
  true_pi(0, 0) = 0.7;
  true_pi(0, 1) = 0.3;
  true_pi(1, 0) = 0.3;
  true_pi(1, 1) = 0.7;

  Hyperparams hyper;
  hyper.alpha_d = {1.0, 1.0};
  SyntheticCorpus synth =
      sample_corpus(true_tau, true_pi, hyper, 350, 8.0, mix_seed(20260851, 0));

  Corpus train_corpus, heldout_corpus;
  train_corpus.vocabulary = synth.corpus.vocabulary;
  heldout_corpus.vocabulary = synth.corpus.vocabulary;
  for (int d = 0; d < 300; ++d) {
    train_corpus.documents.push_back(synth.corpus.documents[d]);
  }
  for (int d = 300; d < 350; ++d) {
    heldout_corpus.documents.push_back(synth.corpus.documents[d]);
  }

  TrainConfig cfg;
  cfg.seed = mix_seed(20260851, 1);
  auto [global, trace] = train(train_corpus, hyper, cfg);

  Matrix estimated(K, V);
  for (int i = 0; i < K; ++i) {
    for (int v = 0; v < V; ++v) estimated(i, v) = std::exp(global.log_tau(i, v));
  }
  auto [perm, tv] = match_topics(estimated, true_tau);

  GlobalParams untrained =
      init_global(K, V, hyper.alpha_t, mix_seed(20260851, 2));
  auto mean_heldout = [&](const GlobalParams& model) {
    double acc = 0.0;
    long tokens = 0;
    EStepConfig ecfg;
    for (std::size_t d = 0; d < heldout_corpus.documents.size(); ++d) {
      const DepDocument& doc = heldout_corpus.documents[d];
      if (doc.size() == 0) continue;
      acc += heldout_bound(model, hyper, doc, ecfg, mix_seed(20260851, 100 + d)) *
             doc.size();
      tokens += doc.size();
    }
    return acc / tokens;
  };
  double trained_bound = mean_heldout(global);
  double untrained_bound = mean_heldout(untrained);

  std::ostringstream ss;
  ss << "mean TV " << tv << " (limit 0.15); held-out per-word bound trained "
     << trained_bound << " vs untrained " << untrained_bound;
  report(6, "synthetic_recovery", tv <= 0.15 && trained_bound > untrained_bound,
         ss.str());
}

// ---- criterion 7: thread-count determinism through the CLI ---------------

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> trace_without_seconds(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    rows.push_back(line.substr(0, line.rfind(',')));
  }
  return rows;
}

void criterion_determinism() {
  const std::string cli = TREESTM_CLI_PATH;
  auto sh = [](const std::string& cmd) {
    return WEXITSTATUS(std::system((cmd + " > /dev/null 2>&1").c_str()));
  };
  bool ok = true;
  std::ostringstream ss;
  if (sh(cli + " generate --topics 3 --vocab 15 --docs 80 --mean-length 7"
               " --seed 9 --out /tmp/acc7_corpus.txt") != 0) {
    ok = false;
    ss << "generate failed";
  } else if (sh(cli + " train --corpus /tmp/acc7_corpus.txt --topics 3 --seed 7"
                      " --threads 1 --max-em-iters 15 --out /tmp/acc7_t1.model"
                      " --trace /tmp/acc7_t1.csv") != 0 ||
             sh(cli + " train --corpus /tmp/acc7_corpus.txt --topics 3 --seed 7"
                      " --threads 4 --max-em-iters 15 --out /tmp/acc7_t4.model"
                      " --trace /tmp/acc7_t4.csv") != 0) {
    ok = false;
    ss << "train failed";
  } else {
    bool models_equal = slurp("/tmp/acc7_t1.model") == slurp("/tmp/acc7_t4.model");
    auto r1 = trace_without_seconds("/tmp/acc7_t1.csv");
    auto r4 = trace_without_seconds("/tmp/acc7_t4.csv");
    bool traces_equal = !r1.empty() && r1 == r4;
    ok = models_equal && traces_equal;
    ss << "threads 1 vs 4: models " << (models_equal ? "identical" : "DIFFER")
       << ", traces (minus seconds) " << (traces_equal ? "identical" : "DIFFER")
       << " over " << r1.size() - 1 << " iterations";
  }
  report(7, "thread_determinism", ok, ss.str());
}

// ---- criterion 8: phi update vs simplex grid ------------------------------

double grid_best_elbo(const DepDocument& doc, const DocVariational& var,
                      const GlobalParams& global, const Hyperparams& hyper,
                      int n, int m) {
  DocVariational probe = var;
  const int K = global.K();
  double best = -HUGE_VAL;
  if (K == 2) {
    for (int i = 0; i <= m; ++i) {
      probe.phi(n, 0) = double(i) / m;
      probe.phi(n, 1) = 1.0 - double(i) / m;
      best = std::max(best, document_elbo(doc, probe, global, hyper).total);
    }
  } else {
    for (int a = 0; a <= m; ++a) {
      for (int b = 0; b + a <= m; ++b) {
        probe.phi(n, 0) = double(a) / m;
        probe.phi(n, 1) = double(b) / m;
        probe.phi(n, 2) = double(m - a - b) / m;
        best = std::max(best, document_elbo(doc, probe, global, hyper).total);
      }
    }
  }
  return best;
}

void criterion_phi_grid() {
  bool ok = true;
  double worst_above = 0.0, worst_below = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int K = t < 5 ? 2 : 3;
    RandomState st = make_random_state(K, 1 + t % 4, mix_seed(20260861, t));
    const int n = st.doc.size() == 1 ? 0 : t % st.doc.size();
    // grid of ~1e4 points: K=2 -> 10001, K=3 -> 9870
    const int m = K == 2 ? 10000 : 139;
    const double resolution = K == 2 ? 1e-6 : 1e-2;
    double grid = grid_best_elbo(st.doc, st.var, st.global, st.hyper, n, m);
    update_phi(st.doc, st.var, st.global, n);
    double attained = document_elbo(st.doc, st.var, st.global, st.hyper).total;
    worst_below = std::max(worst_below, grid - attained);
    worst_above = std::max(worst_above, attained - grid);
    if (!(attained >= grid - 1e-9 && attained - grid <= resolution)) ok = false;
  }
  std::ostringstream ss;
  ss << "max (grid - attained) " << worst_below
     << " (limit 1e-9); max (attained - grid) " << worst_above
     << " (within grid resolution)";
  report(8, "phi_update_optimality", ok, ss.str());
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_elbo_mc_agreement();
  criterion_gradients();
  criterion_omega();
  criterion_monotonicity();
  criterion_identities();
  criterion_recovery();
  criterion_determinism();
  criterion_phi_grid();
  std::printf("%d/8 criteria passed\n", 8 - failures);
  return failures;
}
