#pragma once

// Shared small machinery: variable-index sets as 64-bit masks, enumeration
// of [m]^n input spaces, k-subset iteration, and a chunked parallel map.

#include <bit>
#include <cstdint>
#include <functional>
#include <future>
#include <thread>
#include <vector>

#include "lg/errors.hpp"

namespace lg {

using VarIndex = int;
using VertexId = int;

// A set of input-variable indices. 64 variables is plenty at desk scale
// (the largest catalog instance uses C(7,2) = 21 edge variables).
using VarSet = std::uint64_t;

inline constexpr int kMaxVars = 64;

inline bool set_contains(VarSet s, int i) { return (s >> i) & VarSet{1}; }
inline VarSet set_with(VarSet s, int i) { return s | (VarSet{1} << i); }
inline VarSet set_without(VarSet s, int i) { return s & ~(VarSet{1} << i); }
inline int set_size(VarSet s) { return std::popcount(s); }
inline bool subset_of(VarSet a, VarSet b) { return (a & ~b) == 0; }

inline std::vector<int> set_elements(VarSet s) {
  std::vector<int> out;
  while (s) {
    int i = std::countr_zero(s);
    out.push_back(i);
    s &= s - 1;
  }
  return out;
}

inline VarSet set_from(const std::vector<int>& elems) {
  VarSet s = 0;
  for (int e : elems) {
    if (e < 0 || e >= kMaxVars) throw Error(Fault::validation, "variable index out of range");
    s = set_with(s, e);
  }
  return s;
}

// m^n with an overflow guard; anything that would not fit in 63 bits is
// far beyond every enumeration budget anyway.
inline std::uint64_t checked_pow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > (std::uint64_t{1} << 62) / base)
      return std::uint64_t{1} << 63; // sentinel: "huge"
    r *= base;
  }
  return r;
}

inline std::uint64_t binomial_u64(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// Odometer over [m]^n in lexicographic order (x[0] least significant).
// Usage: x = first_input(n); do { ... } while (next_input(x, m));
inline std::vector<int> first_input(int n) { return std::vector<int>(n, 0); }

inline bool next_input(std::vector<int>& x, int m) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (++x[i] < m) return true;
    x[i] = 0;
  }
  return false;
}

// All k-subsets of [n], each as a VarSet, in lexicographic order of the
// sorted element lists.
inline std::vector<VarSet> k_subsets(int n, int k) {
  std::vector<VarSet> out;
  if (k < 0 || k > n) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    out.push_back(set_from(idx));
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

// All subsets of the given ground set (as masks), lexicographic in the
// packed bit pattern; 2^|ground| entries.
inline std::vector<VarSet> all_subsets(VarSet ground) {
  std::vector<int> elems = set_elements(ground);
  std::vector<VarSet> out;
  out.reserve(std::size_t{1} << elems.size());
  for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << elems.size()); ++pattern) {
    VarSet s = 0;
    for (std::size_t i = 0; i < elems.size(); ++i)
      if ((pattern >> i) & 1) s = set_with(s, elems[i]);
    out.push_back(s);
  }
  return out;
}

// Chunked parallel map over [0, count). Worker exceptions propagate.
// Per-input solves across the toolkit are pure, so this is safe wherever
// it is used.
template <typename F>
void parallel_for(std::size_t count, F&& body) {
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = hw ? hw : 1;
  if (workers <= 1 || count < 2 * workers) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::future<void>> futures;
  std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    futures.push_back(std::async(std::launch::async, [lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    }));
  }
  for (auto& f : futures) f.get();
}

} // namespace lg
