#include "vdc/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vdc {

namespace {

// Counts exchanges while merge-sorting arr; Knight 1966.
std::uint64_t merge_count(double* from, double* to, std::size_t middle,
                          std::size_t len) {
  std::size_t li = 0, ri = middle, out = 0;
  std::uint64_t swaps = 0;
  while (li < middle && ri < len) {
    if (from[ri] < from[li]) {
      to[out++] = from[ri++];
      swaps += middle - li;
    } else {
      to[out++] = from[li++];
    }
  }
  while (li < middle) to[out++] = from[li++];
  while (ri < len) to[out++] = from[ri++];
  return swaps;
}

std::uint64_t sort_count(double* arr, double* buf, std::size_t len) {
  if (len < 2) return 0;
  if (len < 16) {  // insertion sort for short runs
    std::uint64_t swaps = 0;
    for (std::size_t i = 1; i < len; ++i) {
      double val = arr[i];
      std::size_t j = i;
      while (j > 0 && arr[j - 1] > val) {
        arr[j] = arr[j - 1];
        --j;
        ++swaps;
      }
      arr[j] = val;
    }
    return swaps;
  }
  std::size_t half = len / 2;
  std::uint64_t swaps = sort_count(arr, buf, half);
  swaps += sort_count(arr + half, buf + half, len - half);
  swaps += merge_count(arr, buf, half, len);
  std::memcpy(arr, buf, len * sizeof(double));
  return swaps;
}

std::uint64_t tie_pairs_sorted(const std::vector<double>& v) {
  std::uint64_t pairs = 0, run = 1;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] == v[i - 1]) {
      ++run;
    } else {
      pairs += run * (run - 1) / 2;
      run = 1;
    }
  }
  pairs += run * (run - 1) / 2;
  return pairs;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  if (n < 2) throw std::invalid_argument("kendall_tau: need at least 2 points");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[perm[i]];

  // Tie counts: n1 over x groups, n3 over joint (x,y) groups.
  std::uint64_t n1 = 0, n3 = 0;
  {
    std::uint64_t run_x = 1, run_xy = 1;
    for (std::size_t i = 1; i < n; ++i) {
      bool same_x = x[perm[i]] == x[perm[i - 1]];
      bool same_xy = same_x && ys[i] == ys[i - 1];
      if (same_x) {
        ++run_x;
      } else {
        n1 += run_x * (run_x - 1) / 2;
        run_x = 1;
      }
      if (same_xy) {
        ++run_xy;
      } else {
        n3 += run_xy * (run_xy - 1) / 2;
        run_xy = 1;
      }
    }
    n1 += run_x * (run_x - 1) / 2;
    n3 += run_xy * (run_xy - 1) / 2;
  }

  std::vector<double> buf(n);
  std::uint64_t swaps = sort_count(ys.data(), buf.data(), n);
  std::uint64_t n2 = tie_pairs_sorted(ys);

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (n1 == n0 || n2 == n0)
    throw std::invalid_argument("kendall_tau: degenerate (constant) input");

  // concordant minus discordant
  const std::int64_t num = static_cast<std::int64_t>(n0) -
                           static_cast<std::int64_t>(n1) -
                           static_cast<std::int64_t>(n2) +
                           static_cast<std::int64_t>(n3) -
                           2 * static_cast<std::int64_t>(swaps);
  // equal tie counts (the common no-ties case included) divide exactly
  const double denom = n1 == n2 ? static_cast<double>(n0 - n1)
                                : std::sqrt(static_cast<double>(n0 - n1)) *
                                      std::sqrt(static_cast<double>(n0 - n2));
  return static_cast<double>(num) / denom;
}

}  // namespace vdc
