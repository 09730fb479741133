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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "treestm/corpus.hpp"
#include "treestm/model_state.hpp"

using namespace treestm;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

// Runs the built binary; TREESTM_CLI_PATH is injected by the build.
RunResult run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  std::string out_path = "/tmp/treestm_cli_out_" + std::to_string(counter++);
  std::string cmd =
      env + " " + std::string(TREESTM_CLI_PATH) + " " + args + " > " +
      out_path + " 2>&1";
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  std::remove(out_path.c_str());
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// csv rows without the run-dependent seconds column
std::vector<std::string> trace_without_seconds(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    rows.push_back(line.substr(0, line.rfind(',')));
  }
  return rows;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run("train --topics 2 --out /tmp/m.model").exit_code == 1);
  CHECK(run("train --corpus /tmp/c.txt --topics 2 --out /tmp/m.model "
            "--no-such-flag 1").exit_code == 1);
  CHECK(run("frobnicate").exit_code == 1);
  CHECK(run("").exit_code == 1);
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("generate is deterministic and validates sizes") {
  RunResult a = run("generate --topics 2 --vocab 10 --docs 50 --mean-length 8 "
                    "--seed 1 --out /tmp/gen_a.txt");
  REQUIRE(a.exit_code == 0);
  RunResult b = run("generate --topics 2 --vocab 10 --docs 50 --mean-length 8 "
                    "--seed 1 --out /tmp/gen_b.txt");
  REQUIRE(b.exit_code == 0);
  CHECK(slurp("/tmp/gen_a.txt") == slurp("/tmp/gen_b.txt"));
  CHECK(slurp("/tmp/gen_a.txt.truth") == slurp("/tmp/gen_b.txt.truth"));

  CHECK(run("generate --topics 2 --vocab 10 --docs 0 --mean-length 8 "
            "--out /tmp/gen_c.txt").exit_code == 1);
}

TEST_CASE("generated token count concentrates around docs * mean_length") {
  RunResult r = run("generate --topics 2 --vocab 12 --docs 300 --mean-length 8 "
                    "--seed 5 --out /tmp/gen_big.txt");
  REQUIRE(r.exit_code == 0);
  std::ifstream in("/tmp/gen_big.txt");
  Corpus c = parse_corpus(in);
  long tokens = 0;
  for (const auto& d : c.documents) tokens += d.size();
  CHECK(std::fabs(tokens - 300.0 * 8.0) <= 0.10 * 300.0 * 8.0);
}

TEST_CASE("train at K=1 reports the smoothed-frequency likelihood") {
  REQUIRE(run("generate --topics 2 --vocab 9 --docs 40 --mean-length 6 --seed 2 "
              "--out /tmp/k1_corpus.txt").exit_code == 0);
  RunResult r = run("train --corpus /tmp/k1_corpus.txt --topics 1 "
                    "--out /tmp/k1.model --trace /tmp/k1.trace.csv --seed 3");
  REQUIRE(r.exit_code == 0);

  // expected: sum over tokens of log smoothed frequency
  std::ifstream cin("/tmp/k1_corpus.txt");
  Corpus corpus = parse_corpus(cin);
  const int V = corpus.vocabulary.size();
  std::vector<double> freq(V, 0.0);
  double total = 0.0;
  for (const auto& doc : corpus.documents) {
    for (int w : doc.words) {
      freq[w] += 1.0;
      total += 1.0;
    }
  }
  double expected = 0.0;
  for (const auto& doc : corpus.documents) {
    for (int w : doc.words) {
      expected += std::log((freq[w] + 1e-10) / (total + V * 1e-10));
    }
  }

  std::string line;
  std::ifstream trace("/tmp/k1.trace.csv");
  std::getline(trace, line);  // header
  std::string last;
  while (std::getline(trace, line)) last = line;
  std::string elbo_field = last.substr(last.find(',') + 1);
  elbo_field = elbo_field.substr(0, elbo_field.find(','));
  double final_elbo = std::stod(elbo_field);
  CHECK(std::fabs(final_elbo - expected) <=
        1e-9 * std::max(1.0, std::fabs(expected)));

  // the printed line agrees with the trace
  CHECK(r.output.find("final corpus ELBO") != std::string::npos);
}

TEST_CASE("training is thread-count invariant") {
  REQUIRE(run("generate --topics 2 --vocab 10 --docs 60 --mean-length 7 "
              "--seed 11 --out /tmp/det_corpus.txt").exit_code == 0);
  REQUIRE(run("train --corpus /tmp/det_corpus.txt --topics 2 --seed 7 "
              "--threads 1 --max-em-iters 12 --out /tmp/det1.model "
              "--trace /tmp/det1.trace.csv").exit_code == 0);
  REQUIRE(run("train --corpus /tmp/det_corpus.txt --topics 2 --seed 7 "
              "--threads 4 --max-em-iters 12 --out /tmp/det4.model "
              "--trace /tmp/det4.trace.csv").exit_code == 0);

  CHECK(slurp("/tmp/det1.model") == slurp("/tmp/det4.model"));
  CHECK(trace_without_seconds("/tmp/det1.trace.csv") ==
        trace_without_seconds("/tmp/det4.trace.csv"));
}

TEST_CASE("eval on the training corpus with a K=1 model") {
  REQUIRE(run("generate --topics 1 --vocab 6 --docs 30 --mean-length 5 --seed 21 "
              "--out /tmp/eval_corpus.txt").exit_code == 0);
  REQUIRE(run("train --corpus /tmp/eval_corpus.txt --topics 1 "
              "--out /tmp/eval.model --seed 1").exit_code == 0);
  RunResult r = run("eval --model /tmp/eval.model --corpus /tmp/eval_corpus.txt");
  REQUIRE(r.exit_code == 0);

  // expected mean log tau over observed words
  std::ifstream min("/tmp/eval.model");
  LoadedModel model = deserialize_model(min);
  std::ifstream cin("/tmp/eval_corpus.txt");
  Corpus corpus = parse_corpus(cin);
  double acc = 0.0;
  long tokens = 0;
  for (const auto& doc : corpus.documents) {
    for (int w : doc.words) {
      int id = model.vocab.lookup(corpus.vocabulary.id_to_token[w]);
      REQUIRE(id >= 0);
      acc += model.global.log_tau(0, id);
      ++tokens;
    }
  }
  double expected = acc / tokens;

  auto pos = r.output.find("mean per-word bound: ");
  REQUIRE(pos != std::string::npos);
  double got = std::stod(r.output.substr(pos + 21));
  CHECK(std::fabs(got - expected) <= 1e-9 * std::max(1.0, std::fabs(expected)));
}

TEST_CASE("eval maps unseen tokens to the smoothing floor") {
  REQUIRE(run("generate --topics 2 --vocab 5 --docs 20 --mean-length 5 --seed 31 "
              "--out /tmp/oov_train.txt").exit_code == 0);
  REQUIRE(run("train --corpus /tmp/oov_train.txt --topics 2 "
              "--out /tmp/oov.model --seed 1").exit_code == 0);
  {
    std::ofstream out("/tmp/oov_eval.txt");
    out << "1 zebra 0\n2 quagga 1\n3 okapi 1\n";
  }
  RunResult r = run("eval --model /tmp/oov.model --corpus /tmp/oov_eval.txt");
  REQUIRE(r.exit_code == 0);
  auto pos = r.output.find("mean per-word bound: ");
  REQUIRE(pos != std::string::npos);
  double got = std::stod(r.output.substr(pos + 21));
  CHECK(std::isfinite(got));
  // every word is at the floor, so the per-word bound cannot beat log(floor)
  CHECK(got <= std::log(1e-10) + 1e-9);
}

TEST_CASE("check passes clean and fails under fault injection") {
  RunResult clean = run("check --mc-samples 30000 --seed 12");
  CHECK(clean.exit_code == 0);
  CHECK(clean.output.find("all checks passed") != std::string::npos);

  RunResult faulty =
      run("check --mc-samples 30000 --seed 12", "TREESTM_FAULT=phi_entropy_sign");
  CHECK(faulty.exit_code == 3);
  CHECK(faulty.output.find("FAIL") != std::string::npos);
  CHECK(faulty.output.find("phi_entropy") != std::string::npos);
}

TEST_CASE("alpha-d accepts a scalar broadcast or a comma list") {
  REQUIRE(run("generate --topics 2 --vocab 6 --docs 15 --mean-length 4 --seed 41 "
              "--out /tmp/ad_corpus.txt").exit_code == 0);
  CHECK(run("train --corpus /tmp/ad_corpus.txt --topics 2 --alpha-d 0.5,1.5 "
            "--out /tmp/ad.model --seed 1 --max-em-iters 3").exit_code == 0);
  CHECK(run("train --corpus /tmp/ad_corpus.txt --topics 2 --alpha-d 0.5,1.5,2.0 "
            "--out /tmp/ad.model --seed 1").exit_code == 1);
  CHECK(run("train --corpus /tmp/ad_corpus.txt --topics 2 --alpha-d -1 "
            "--out /tmp/ad.model --seed 1").exit_code == 1);
}

TEST_CASE("train reports corpus parse errors with exit 1") {
  {
    std::ofstream out("/tmp/bad_corpus.txt");
    out << "1 a 0\n2 b 9\n";
  }
  RunResult r = run("train --corpus /tmp/bad_corpus.txt --topics 2 "
                    "--out /tmp/bad.model");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("document") != std::string::npos);
}
