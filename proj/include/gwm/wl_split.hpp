// Structure-based dataset splitting. Each molecule is reduced to a skeleton
// key: a Weisfeiler-Lehman hash (3 refinement rounds) of its graph with atom
// labels erased and bonds untyped. Whole key-groups are dealt greedily to
// train, then validation, then test, so two molecules sharing a skeleton can
// never end up in different splits.
#pragma once

#include "gwm/mol.hpp"
#include "gwm/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gwm {

namespace detail_wl {

inline std::uint64_t fnv1a64(const std::uint64_t* data, std::size_t count,
                             std::uint64_t h = 14695981039346656037ull) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t x = data[i];
    for (int b = 0; b < 8; ++b) {
      h ^= (x >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace detail_wl

inline std::uint64_t skeleton_key(const MolGraph& g, int iterations = 3) {
  const auto adj = g.neighbor_lists();
  const std::size_t n = g.atoms.size();
  std::vector<std::uint64_t> color(n, 1);  // labels erased: everything starts equal
  std::vector<std::uint64_t> next(n);
  std::vector<std::uint64_t> buf;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      buf.clear();
      buf.push_back(color[i]);
      std::vector<std::uint64_t> nb;
      nb.reserve(adj[i].size());
      for (int j : adj[i]) nb.push_back(color[static_cast<std::size_t>(j)]);
      std::sort(nb.begin(), nb.end());
      buf.insert(buf.end(), nb.begin(), nb.end());
      next[i] = detail_wl::fnv1a64(buf.data(), buf.size());
    }
    color.swap(next);
  }
  std::sort(color.begin(), color.end());
  return detail_wl::fnv1a64(color.data(), color.size());
}

struct SplitIndices {
  std::vector<int> train, val, test;
};

template <typename MolAccess>
inline SplitIndices skeleton_split_by(std::size_t count, MolAccess mol_at,
                                      double train_frac, double val_frac, double test_frac,
                                      std::uint64_t seed) {
  if (count < 3) throw DataError("split: need at least 3 molecules, got " + std::to_string(count));
  if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0 ||
      std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw DataError("split: fractions must be positive and sum to 1");

  std::map<std::uint64_t, std::vector<int>> groups;
  for (std::size_t i = 0; i < count; ++i)
    groups[skeleton_key(mol_at(i))].push_back(static_cast<int>(i));

  std::vector<std::pair<std::uint64_t, std::vector<int>>> ordered(groups.begin(), groups.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
    return a.first < b.first;
  });

  const double n = static_cast<double>(count);
  SplitIndices out;
  std::size_t gi = 0;
  auto fill = [&](std::vector<int>& dst, double target) {
    while (gi < ordered.size() && static_cast<double>(dst.size()) < target)
      for (int idx : ordered[gi++].second) dst.push_back(idx);
  };
  fill(out.train, train_frac * n);
  fill(out.val, val_frac * n);
  while (gi < ordered.size())
    for (int idx : ordered[gi++].second) out.test.push_back(idx);

  Rng rng(seed);
  rng.shuffle(out.train);
  rng.shuffle(out.val);
  rng.shuffle(out.test);
  return out;
}

// Structure-blind alternative: a seeded shuffle cut at the fraction marks.
inline SplitIndices random_split(std::size_t count, double train_frac, double val_frac,
                                 double test_frac, std::uint64_t seed) {
  if (count < 3) throw DataError("split: need at least 3 molecules, got " + std::to_string(count));
  if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0 ||
      std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw DataError("split: fractions must be positive and sum to 1");
  std::vector<int> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n_train = static_cast<std::size_t>(train_frac * static_cast<double>(count));
  const auto n_val = static_cast<std::size_t>(val_frac * static_cast<double>(count));
  SplitIndices out;
  out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  if (out.train.empty() || out.val.empty() || out.test.empty())
    throw DataError("split: a split came out empty; adjust fractions or add data");
  return out;
}

}  // namespace gwm
