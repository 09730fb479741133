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
#ifndef TREESTM_REDUCE_HPP
#define TREESTM_REDUCE_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace treestm {

// Pairwise (tree) summation. The bracketing depends only on n, so results
// are identical no matter how work was distributed beforehand, and rounding
// error grows like log n instead of n.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

// Pairwise reduction of indexed items [0, n) under `combine(acc, item(i))`.
// `item(i)` values are combined in a fixed tree over the index range.
template <typename T, typename Item, typename Combine>
T pairwise_reduce(std::size_t lo, std::size_t hi, Item&& item,
                  Combine&& combine) {
  if (hi - lo == 1) return item(lo);
  std::size_t mid = lo + (hi - lo) / 2;
  T left = pairwise_reduce<T>(lo, mid, item, combine);
  T right = pairwise_reduce<T>(mid, hi, item, combine);
  return combine(std::move(left), std::move(right));
}

}  // namespace treestm

#endif
