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
#ifndef TREESTM_RNG_HPP
#define TREESTM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace treestm {

// Seeded, portable pseudo-random generator with fully pinned-down
// algorithms, so that seeded draws are bit-identical across platforms and
// stdlib versions (std::*_distribution is implementation-defined and would
// not be). Core generator: xoshiro256++ (Blackman & Vigna), state seeded
// with splitmix64. Derived draws:
//   uniform:     53-bit mantissa in [0, 1)
//   normal:      Box-Muller, both values used
//   gamma:       Marsaglia-Tsang squeeze method; shape < 1 via boost
//   dirichlet:   normalized gamma draws
//   poisson:     Knuth product method (small means only)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // integer in [0, n)
  int uniform_int(int n) {
    int v = static_cast<int>(uniform() * n);
    return v >= n ? n - 1 : v;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Gamma(shape, 1), shape > 0.
  double gamma(double shape) {
    if (shape < 1.0) {
      double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform_pos();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // theta ~ Dirichlet(params); out resized to params.size().
  void dirichlet(const std::vector<double>& params, std::vector<double>& out) {
    out.resize(params.size());
    double total = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = gamma(params[i]);
      if (g < 1e-300) g = 1e-300;
      out[i] = g;
      total += g;
    }
    for (double& v : out) v /= total;
  }

  // index ~ probs (assumed to sum to ~1); ties resolved by scan order.
  int categorical(const double* probs, int n) {
    double u = uniform();
    double acc = 0.0;
    int last_positive = 0;
    for (int i = 0; i < n; ++i) {
      if (probs[i] > 0.0) last_positive = i;
      acc += probs[i];
      if (u < acc) return i;
    }
    return last_positive;
  }

  // Poisson(mean) by Knuth's product method; fine for the desk-scale means
  // used here (exp(-mean) must not underflow, i.e. mean < ~700).
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derive an independent stream for (seed, stream): one splitmix64 step over
// a mix of both. Used to give documents / sample chunks their own streams
// deterministically.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace treestm

#endif
