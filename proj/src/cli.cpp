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
#include "treestm/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "treestm/checks.hpp"
#include "treestm/errors.hpp"
#include "treestm/inference.hpp"
#include "treestm/model_state.hpp"
#include "treestm/oracle.hpp"
#include "treestm/rng.hpp"

namespace treestm {

namespace {

std::vector<double> parse_alpha_d(const std::string& text, int K) {
  std::vector<double> values;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    values.push_back(std::stod(item));
  }
  if (values.size() == 1) values.assign(K, values[0]);
  if (static_cast<int>(values.size()) != K) {
    throw std::invalid_argument("--alpha-d needs 1 or K comma-separated values");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument("--alpha-d entries must be finite and > 0");
    }
  }
  return values;
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open corpus file: " + path);
  return parse_corpus(in);
}

struct CommonFlags {
  std::string corpus_path, model_path, out_path, trace_path;
  int topics = 0;
  std::string alpha_d = "1.0";
  double beta_star = 1.0;
  double alpha_t = 1.0;
  int max_em_iters = 200;
  double em_tol = 1e-5;
  double estep_tol = 1e-6;
  int max_sweeps = 50;
  std::uint64_t seed = 0;
  int threads = 1;
  long mc_samples = 1000000;
  int vocab = 0;
  int docs = 0;
  double mean_length = 0.0;
};

int cmd_train(const CommonFlags& f) {
  Corpus corpus = read_corpus_file(f.corpus_path);

  Hyperparams hyper;
  hyper.alpha_d = parse_alpha_d(f.alpha_d, f.topics);
  hyper.beta_star = f.beta_star;
  hyper.alpha_t = f.alpha_t;

  TrainConfig cfg;
  cfg.max_em_iters = f.max_em_iters;
  cfg.em_tol = f.em_tol;
  cfg.estep.tol = f.estep_tol;
  cfg.estep.max_sweeps = f.max_sweeps;
  cfg.seed = f.seed;
  cfg.worker_count = f.threads;

  auto [global, trace] = train(corpus, hyper, cfg);

  {
    std::ofstream out(f.out_path);
    if (!out) throw std::invalid_argument("cannot write model file: " + f.out_path);
    serialize_model(global, hyper, corpus.vocabulary, out);
  }
  {
    std::string trace_path =
        f.trace_path.empty() ? f.out_path + ".trace.csv" : f.trace_path;
    std::ofstream out(trace_path);
    if (!out) throw std::invalid_argument("cannot write trace file: " + trace_path);
    write_trace_csv(trace, out);
  }

  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", trace.rows.back().elbo);
  std::cout << "final corpus ELBO: " << buf << "\n";
  return 0;
}

// Remap an eval document onto the model vocabulary; unseen tokens go to a
// reserved extra id carrying the smoothing-floor probability.
DepDocument remap_document(const DepDocument& doc, const Vocabulary& from,
                           const Vocabulary& to) {
  DepDocument out = doc;
  const int unknown_id = to.size();
  for (int n = 0; n < doc.size(); ++n) {
    int id = to.lookup(from.id_to_token[doc.words[n]]);
    out.words[n] = id < 0 ? unknown_id : id;
  }
  return out;
}

GlobalParams extend_with_unknown(const GlobalParams& global) {
  const int K = global.K();
  const int V = global.V();
  GlobalParams out;
  out.nu = global.nu;
  out.log_tau = Matrix(K, V + 1);
  const double floor_log = std::log(1e-10 / (1.0 + V * 1e-10));
  for (int i = 0; i < K; ++i) {
    for (int v = 0; v < V; ++v) out.log_tau(i, v) = global.log_tau(i, v);
    out.log_tau(i, V) = floor_log;
  }
  return out;
}

int cmd_eval(const CommonFlags& f) {
  std::ifstream model_in(f.model_path);
  if (!model_in) {
    throw std::invalid_argument("cannot open model file: " + f.model_path);
  }
  LoadedModel model = deserialize_model(model_in);
  Corpus corpus = read_corpus_file(f.corpus_path);

  GlobalParams extended = extend_with_unknown(model.global);
  EStepConfig cfg;
  cfg.tol = f.estep_tol;
  cfg.max_sweeps = f.max_sweeps;

  std::cout << "doc\ttokens\tbound\tper_word\n";
  double total_bound = 0.0;
  long total_tokens = 0;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const DepDocument mapped =
        remap_document(corpus.documents[d], corpus.vocabulary, model.vocab);
    const int n = mapped.size();
    double per_word = 0.0;
    if (n > 0) {
      per_word = heldout_bound(extended, model.hyper, mapped, cfg,
                               mix_seed(f.seed, d));
      total_bound += per_word * n;
      total_tokens += n;
    }
    std::printf("%zu\t%d\t%.17g\t%.17g\n", d, n, per_word * n, per_word);
  }
  if (total_tokens > 0) {
    std::printf("mean per-word bound: %.17g (%ld tokens)\n",
                total_bound / total_tokens, total_tokens);
  } else {
    std::printf("mean per-word bound: 0 (0 tokens)\n");
  }
  return 0;
}

int cmd_generate(const CommonFlags& f) {
  if (f.docs < 1) throw std::invalid_argument("--docs must be >= 1");
  if (f.vocab < 1) throw std::invalid_argument("--vocab must be >= 1");
  if (!(f.mean_length >= 1.0)) {
    throw std::invalid_argument("--mean-length must be >= 1");
  }

  const int K = f.topics;
  const int V = f.vocab;
  Hyperparams hyper;
  hyper.alpha_d = parse_alpha_d(f.alpha_d, K);
  hyper.beta_star = f.beta_star;
  hyper.alpha_t = f.alpha_t;

  Matrix true_tau(K, V), true_pi(K, K);
  Rng rng(mix_seed(f.seed, 0xd1ce));
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

  SyntheticCorpus synth =
      sample_corpus(true_tau, true_pi, hyper, f.docs, f.mean_length, f.seed);
  {
    std::ofstream out(f.out_path);
    if (!out) throw std::invalid_argument("cannot write corpus file: " + f.out_path);
    serialize_corpus(synth.corpus, out);
  }
  {
    std::ofstream out(f.out_path + ".truth");
    if (!out) {
      throw std::invalid_argument("cannot write truth sidecar: " + f.out_path +
                                  ".truth");
    }
    write_truth_sidecar(synth, out);
  }

  long tokens = 0;
  for (const auto& doc : synth.corpus.documents) tokens += doc.size();
  std::cout << "docs=" << synth.corpus.documents.size() << " tokens=" << tokens
            << " vocab=" << synth.corpus.vocabulary.size() << "\n";
  return 0;
}

int cmd_check(const CommonFlags& f) {
  bool ok = run_self_checks(f.mc_samples, f.seed, std::cout);
  if (!ok) {
    std::cout << "self checks FAILED\n";
    return 3;
  }
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"variational inference for dependency-tree topic models"};
  app.require_subcommand(1);
  CommonFlags f;

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--topics", f.topics, "number of topics K")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--alpha-d", f.alpha_d,
                    "theta prior base measure (scalar broadcast or comma list)");
    cmd->add_option("--beta-star", f.beta_star, "theta prior concentration")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--alpha-t", f.alpha_t, "transition prior weight")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* train_cmd = app.add_subcommand("train", "fit a model to a corpus");
  train_cmd->add_option("--corpus", f.corpus_path, "corpus file")->required();
  train_cmd->add_option("--out", f.out_path, "output model file")->required();
  train_cmd->add_option("--trace", f.trace_path,
                        "trace csv (default <out>.trace.csv)");
  add_model_flags(train_cmd);
  train_cmd->add_option("--max-em-iters", f.max_em_iters)->check(CLI::PositiveNumber);
  train_cmd->add_option("--em-tol", f.em_tol)->check(CLI::PositiveNumber);
  train_cmd->add_option("--estep-tol", f.estep_tol)->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-sweeps", f.max_sweeps)->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", f.seed);
  train_cmd->add_option("--threads", f.threads)->check(CLI::PositiveNumber);

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "held-out per-word bound of a corpus");
  eval_cmd->add_option("--model", f.model_path, "model file")->required();
  eval_cmd->add_option("--corpus", f.corpus_path, "corpus file")->required();
  eval_cmd->add_option("--estep-tol", f.estep_tol)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--max-sweeps", f.max_sweeps)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", f.seed);

  CLI::App* gen_cmd =
      app.add_subcommand("generate", "sample a synthetic corpus with truth");
  gen_cmd->add_option("--out", f.out_path, "output corpus file")->required();
  add_model_flags(gen_cmd);
  gen_cmd->add_option("--vocab", f.vocab, "vocabulary size")->required();
  gen_cmd->add_option("--docs", f.docs, "number of documents")->required();
  gen_cmd->add_option("--mean-length", f.mean_length, "mean document length")
      ->required();
  gen_cmd->add_option("--seed", f.seed);

  CLI::App* check_cmd =
      app.add_subcommand("check", "run the oracle self-check suite");
  check_cmd->add_option("--mc-samples", f.mc_samples)->check(CLI::PositiveNumber);
  check_cmd->add_option("--seed", f.seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.get_name()
              << " --help for usage\n";
    return 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(f);
    if (eval_cmd->parsed()) return cmd_eval(f);
    if (gen_cmd->parsed()) return cmd_generate(f);
    if (check_cmd->parsed()) return cmd_check(f);
    std::cerr << "error: no command\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace treestm
