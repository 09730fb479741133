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
#include "treestm/model_state.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "treestm/errors.hpp"
#include "treestm/rng.hpp"

namespace treestm {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DocVariational init_variational(const DepDocument& doc,
                                const Hyperparams& hyper, std::uint64_t seed) {
  const int K = hyper.K();
  const int N = doc.size();
  DocVariational var;
  var.gamma.resize(K);
  for (int i = 0; i < K; ++i) {
    var.gamma[i] = hyper.beta_star * hyper.alpha_d[i] + double(N) / K;
  }
  var.phi = Matrix(N, K);
  Rng rng(seed);
  for (int n = 0; n < N; ++n) {
    double* row = var.phi.row(n);
    double total = 0.0;
    for (int i = 0; i < K; ++i) {
      // multiplicative jitter keeps entries positive for any K
      double u = 2.0 * rng.uniform() - 1.0;
      row[i] = (1.0 / K) * (1.0 + 1e-3 * u);
      total += row[i];
    }
    for (int i = 0; i < K; ++i) row[i] /= total;
  }
  var.omega.assign(N, 1.0);
  return var;
}

GlobalParams init_global(int K, int V, double alpha_t, std::uint64_t seed) {
  if (K < 1 || V < 1) {
    throw std::invalid_argument("init_global: K and V must be >= 1");
  }
  GlobalParams global;
  global.log_tau = Matrix(K, V);
  global.nu = Matrix(K, K);
  Rng rng(seed);
  for (int i = 0; i < K; ++i) {
    double* row = global.log_tau.row(i);
    double total = 0.0;
    for (int v = 0; v < V; ++v) {
      row[v] = rng.uniform_pos();
      total += row[v];
    }
    for (int v = 0; v < V; ++v) row[v] = std::log(row[v] / total);
  }
  const double jitter = std::min(1e-2, 0.5 * alpha_t);
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) {
      double u = 2.0 * rng.uniform() - 1.0;
      global.nu(j, i) = alpha_t + jitter * u;
    }
  }
  debug_validate(global);
  return global;
}

void serialize_model(const GlobalParams& global, const Hyperparams& hyper,
                     const Vocabulary& vocab, std::ostream& out) {
  const int K = global.K();
  const int V = global.V();
  out << "TREESTM v1\n";
  out << "K " << K << " V " << V << "\n";
  out << "ALPHA_D";
  for (double a : hyper.alpha_d) out << ' ' << fmt17(a);
  out << "\n";
  out << "BETA_STAR " << fmt17(hyper.beta_star) << "\n";
  out << "ALPHA_T " << fmt17(hyper.alpha_t) << "\n";
  out << "LOG_TAU\n";
  for (int i = 0; i < K; ++i) {
    const double* row = global.log_tau.row(i);
    for (int v = 0; v < V; ++v) out << (v ? " " : "") << fmt17(row[v]);
    out << "\n";
  }
  out << "NU\n";
  for (int j = 0; j < K; ++j) {
    const double* row = global.nu.row(j);
    for (int i = 0; i < K; ++i) out << (i ? " " : "") << fmt17(row[i]);
    out << "\n";
  }
  out << "VOCAB\n";
  for (int v = 0; v < V; ++v) out << v << ' ' << vocab.id_to_token[v] << "\n";
}

namespace {

std::string next_line(std::istream& in, const char* section) {
  std::string line;
  if (!std::getline(in, line)) {
    throw LoadError(std::string("truncated model file: missing ") + section);
  }
  return line;
}

double parse_real(const std::string& tok, const char* section) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw LoadError(std::string("bad real in ") + section + ": `" + tok + "`");
  }
  if (pos != tok.size()) {
    throw LoadError(std::string("bad real in ") + section + ": `" + tok + "`");
  }
  if (!std::isfinite(v)) {
    throw LoadError(std::string("non-finite value in ") + section);
  }
  return v;
}

std::vector<double> parse_reals(const std::string& line, int expected,
                                const char* section) {
  std::istringstream ss(line);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_real(tok, section));
  if (static_cast<int>(out.size()) != expected) {
    throw LoadError(std::string("dimension mismatch in ") + section +
                    ": expected " + std::to_string(expected) + " values, got " +
                    std::to_string(out.size()));
  }
  return out;
}

}  // namespace

LoadedModel deserialize_model(std::istream& in) {
  LoadedModel m;
  std::string line = next_line(in, "header");
  if (line != "TREESTM v1") {
    throw LoadError("version error: expected `TREESTM v1`, got `" + line + "`");
  }

  line = next_line(in, "dimensions");
  int K = 0, V = 0;
  {
    std::istringstream ss(line);
    std::string kw1, kw2;
    if (!(ss >> kw1 >> K >> kw2 >> V) || kw1 != "K" || kw2 != "V") {
      throw LoadError("bad dimensions line: `" + line + "`");
    }
    if (K < 1 || V < 1) throw LoadError("dimension mismatch: K and V must be >= 1");
  }

  line = next_line(in, "ALPHA_D");
  if (line.rfind("ALPHA_D", 0) != 0) throw LoadError("missing ALPHA_D section");
  m.hyper.alpha_d = parse_reals(line.substr(7), K, "ALPHA_D");

  line = next_line(in, "BETA_STAR");
  if (line.rfind("BETA_STAR", 0) != 0) throw LoadError("missing BETA_STAR section");
  m.hyper.beta_star = parse_reals(line.substr(9), 1, "BETA_STAR")[0];

  line = next_line(in, "ALPHA_T");
  if (line.rfind("ALPHA_T", 0) != 0) throw LoadError("missing ALPHA_T section");
  m.hyper.alpha_t = parse_reals(line.substr(7), 1, "ALPHA_T")[0];

  if (next_line(in, "LOG_TAU") != "LOG_TAU") throw LoadError("missing LOG_TAU section");
  m.global.log_tau = Matrix(K, V);
  for (int i = 0; i < K; ++i) {
    auto row = parse_reals(next_line(in, "LOG_TAU row"), V, "LOG_TAU");
    for (int v = 0; v < V; ++v) m.global.log_tau(i, v) = row[v];
  }

  if (next_line(in, "NU") != "NU") throw LoadError("missing NU section");
  m.global.nu = Matrix(K, K);
  for (int j = 0; j < K; ++j) {
    auto row = parse_reals(next_line(in, "NU row"), K, "NU");
    for (int i = 0; i < K; ++i) m.global.nu(j, i) = row[i];
  }

  if (next_line(in, "VOCAB") != "VOCAB") throw LoadError("missing VOCAB section");
  for (int v = 0; v < V; ++v) {
    std::istringstream ss(next_line(in, "VOCAB entry"));
    int id;
    std::string token;
    if (!(ss >> id >> token) || id != v) {
      throw LoadError("bad VOCAB entry for id " + std::to_string(v));
    }
    if (m.vocab.add(token) != v) {
      throw LoadError("duplicate token in VOCAB: `" + token + "`");
    }
  }

  debug_validate(m.global);
  return m;
}

void debug_validate(const GlobalParams& global) {
  const int K = global.K();
  const int V = global.V();
  if (global.nu.rows != K || global.nu.cols != K) {
    throw std::logic_error("GlobalParams: nu must be K x K");
  }
  for (int i = 0; i < K; ++i) {
    double total = 0.0;
    const double* row = global.log_tau.row(i);
    for (int v = 0; v < V; ++v) {
      if (!std::isfinite(row[v])) {
        throw std::logic_error("GlobalParams: non-finite log_tau entry");
      }
      total += std::exp(row[v]);
    }
    if (std::fabs(total - 1.0) > 1e-10) {
      throw std::logic_error("GlobalParams: exp(log_tau) row does not sum to 1");
    }
  }
  for (double v : global.nu.data) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::logic_error("GlobalParams: nu entries must be finite and > 0");
    }
  }
}

void debug_validate(const DocVariational& var, int K) {
  if (var.K() != K || var.phi.cols != K ||
      static_cast<int>(var.omega.size()) != var.phi.rows) {
    throw std::logic_error("DocVariational: dimension mismatch");
  }
  for (double g : var.gamma) {
    if (!std::isfinite(g) || g <= 0.0) {
      throw std::logic_error("DocVariational: gamma entries must be > 0");
    }
  }
  for (int n = 0; n < var.phi.rows; ++n) {
    double total = 0.0;
    const double* row = var.phi.row(n);
    for (int i = 0; i < K; ++i) {
      if (!(row[i] >= 0.0) || row[i] > 1.0) {
        throw std::logic_error("DocVariational: phi entries must lie in [0,1]");
      }
      total += row[i];
    }
    if (std::fabs(total - 1.0) > 1e-12) {
      throw std::logic_error("DocVariational: phi row does not sum to 1");
    }
  }
  for (double w : var.omega) {
    if (!std::isfinite(w) || w <= 0.0) {
      throw std::logic_error("DocVariational: omega entries must be > 0");
    }
  }
}

}  // namespace treestm
