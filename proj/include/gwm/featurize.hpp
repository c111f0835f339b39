// Atom vocabulary, one-hot node features, raw supernode features, and
// padded batch assembly.
#pragma once

#include "gwm/mol.hpp"
#include "gwm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace gwm {

// "*" is the catch-all bucket for symbols outside the table.
struct AtomVocab {
  std::vector<std::string> symbols;

  static AtomVocab with_unk(std::vector<std::string> syms) {
    if (std::find(syms.begin(), syms.end(), "*") == syms.end()) syms.push_back("*");
    return AtomVocab{std::move(syms)};
  }

  int size() const { return static_cast<int>(symbols.size()); }

  int index_of(const std::string& sym) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i] == sym) return static_cast<int>(i);
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i] == "*") return static_cast<int>(i);
    throw DataError("vocab: symbol '" + sym + "' not in table and no '*' bucket present");
  }
};

template <typename MolIter>
inline AtomVocab build_vocab(MolIter begin, MolIter end) {
  std::set<std::string> seen;
  for (auto it = begin; it != end; ++it)
    for (const Atom& a : it->atoms) seen.insert(a.symbol);
  seen.erase("*");
  return AtomVocab::with_unk({seen.begin(), seen.end()});
}

// One-hot node features [N, |vocab|] plus typed adjacency [R, N, N].
struct Featurized {
  std::vector<std::vector<double>> node_features;
  std::vector<std::vector<double>> adjacency;  // R matrices, row-major N*N
  int n = 0;
};

inline Featurized featurize(const MolGraph& g, const AtomVocab& vocab) {
  Featurized f;
  f.n = g.atom_count();
  f.node_features.assign(static_cast<std::size_t>(f.n),
                         std::vector<double>(static_cast<std::size_t>(vocab.size()), 0.0));
  for (int i = 0; i < f.n; ++i)
    f.node_features[static_cast<std::size_t>(i)]
                   [static_cast<std::size_t>(vocab.index_of(g.atoms[static_cast<std::size_t>(i)].symbol))] = 1.0;
  f.adjacency.assign(kBondTypes, std::vector<double>(static_cast<std::size_t>(f.n) * f.n, 0.0));
  for (const Bond& b : g.bonds) {
    auto& m = f.adjacency[static_cast<std::size_t>(b.type)];
    m[static_cast<std::size_t>(b.a) * f.n + b.b] = 1.0;
    m[static_cast<std::size_t>(b.b) * f.n + b.a] = 1.0;
  }
  return f;
}

// [atom histogram over vocab | bond-type histogram | node count | edge count]
inline std::vector<double> supernode_features(const MolGraph& g, const AtomVocab& vocab) {
  std::vector<double> out(static_cast<std::size_t>(vocab.size()) + kBondTypes + 2, 0.0);
  for (const Atom& a : g.atoms) out[static_cast<std::size_t>(vocab.index_of(a.symbol))] += 1.0;
  const auto hist = g.bond_histogram();
  for (int r = 0; r < kBondTypes; ++r)
    out[static_cast<std::size_t>(vocab.size() + r)] = static_cast<double>(hist[static_cast<std::size_t>(r)]);
  out[out.size() - 2] = static_cast<double>(g.atom_count());
  out[out.size() - 1] = static_cast<double>(g.bond_count());
  return out;
}

inline int supernode_feature_width(const AtomVocab& vocab) {
  return vocab.size() + kBondTypes + 2;
}

struct GraphBatch {
  Tensor node_features;       // [B, N, D0]
  Tensor adjacency;           // [R, B, N, N]
  std::vector<Tensor> adj_rel;  // R tensors [B, N, N], same data per relation
  Tensor total_adjacency;     // [B, N, N] relation-collapsed adjacency
  Tensor norm_adjacency;      // [B, N, N] degree-normalized total adjacency with self-links
  Tensor node_mask;           // [B, N] of 0/1
  Tensor supernode_features;  // [B, Ds]
  Tensor labels;              // [B, T]
  Tensor label_mask;          // [B, T] of 0/1, 0 = missing
  std::vector<int> sizes;

  int batch_size() const { return node_mask.dim(0); }
  int max_nodes() const { return node_mask.dim(1); }
};

struct LabeledMol {
  std::string smiles;
  MolGraph mol;
  std::vector<double> labels;
  std::vector<bool> label_present;
};

// Builds a GraphBatch from raw row-major buffers. Derives the
// relation-collapsed adjacency and its degree-normalized self-looped form
// D^{-1/2} (A + I) D^{-1/2}, restricted to real nodes.
inline GraphBatch assemble_batch(int b, int n, int relations, int d0, int t_width, int ds,
                                 std::vector<double> feats, std::vector<double> adj,
                                 std::vector<double> mask, std::vector<double> sfeat,
                                 std::vector<double> labels, std::vector<double> lmask,
                                 std::vector<int> sizes) {
  GraphBatch out;
  out.sizes = std::move(sizes);

  std::vector<double> total_all(static_cast<std::size_t>(b) * n * n, 0.0);
  std::vector<double> norm(static_cast<std::size_t>(b) * n * n, 0.0);
  for (int g = 0; g < b; ++g) {
    const int ng = out.sizes[static_cast<std::size_t>(g)];
    std::vector<double> total(static_cast<std::size_t>(n) * n, 0.0);
    for (int r = 0; r < relations; ++r)
      for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j)
          total[static_cast<std::size_t>(i) * n + j] +=
              adj[((static_cast<std::size_t>(r) * b + g) * n + i) * n + j];
    std::copy(total.begin(), total.end(), total_all.begin() + static_cast<std::size_t>(g) * n * n);
    for (int i = 0; i < ng; ++i) total[static_cast<std::size_t>(i) * n + i] += 1.0;
    std::vector<double> dinv(static_cast<std::size_t>(ng), 0.0);
    for (int i = 0; i < ng; ++i) {
      double deg = 0.0;
      for (int j = 0; j < ng; ++j) deg += total[static_cast<std::size_t>(i) * n + j];
      dinv[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
    }
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j)
        norm[(static_cast<std::size_t>(g) * n + i) * n + j] =
            dinv[static_cast<std::size_t>(i)] * total[static_cast<std::size_t>(i) * n + j] *
            dinv[static_cast<std::size_t>(j)];
  }

  out.node_features = Tensor::constant({b, n, d0}, std::move(feats));
  out.adjacency = Tensor::constant({relations, b, n, n}, adj);
  out.adj_rel.reserve(static_cast<std::size_t>(relations));
  for (int r = 0; r < relations; ++r)
    out.adj_rel.push_back(Tensor::constant(
        {b, n, n}, std::vector<double>(adj.begin() + static_cast<std::size_t>(r) * b * n * n,
                                       adj.begin() + static_cast<std::size_t>(r + 1) * b * n * n)));
  out.total_adjacency = Tensor::constant({b, n, n}, std::move(total_all));
  out.norm_adjacency = Tensor::constant({b, n, n}, std::move(norm));
  out.node_mask = Tensor::constant({b, n}, std::move(mask));
  out.supernode_features = Tensor::constant({b, ds}, std::move(sfeat));
  out.labels = Tensor::constant({b, t_width}, std::move(labels));
  out.label_mask = Tensor::constant({b, t_width}, std::move(lmask));
  return out;
}

inline GraphBatch batch(const std::vector<LabeledMol>& items, const AtomVocab& vocab, int t_width) {
  if (items.empty()) throw DataError("batch: empty graph list");
  const int b = static_cast<int>(items.size());
  int n = 0;
  for (const auto& it : items) n = std::max(n, it.mol.atom_count());
  const int d0 = vocab.size();
  const int ds = supernode_feature_width(vocab);

  std::vector<int> sizes;
  sizes.reserve(static_cast<std::size_t>(b));
  std::vector<double> feats(static_cast<std::size_t>(b) * n * d0, 0.0);
  std::vector<double> adj(static_cast<std::size_t>(kBondTypes) * b * n * n, 0.0);
  std::vector<double> mask(static_cast<std::size_t>(b) * n, 0.0);
  std::vector<double> sfeat(static_cast<std::size_t>(b) * ds, 0.0);
  std::vector<double> labels(static_cast<std::size_t>(b) * t_width, 0.0);
  std::vector<double> lmask(static_cast<std::size_t>(b) * t_width, 0.0);

  for (int g = 0; g < b; ++g) {
    const auto& item = items[static_cast<std::size_t>(g)];
    const Featurized f = featurize(item.mol, vocab);
    sizes.push_back(f.n);
    for (int i = 0; i < f.n; ++i) {
      mask[static_cast<std::size_t>(g) * n + i] = 1.0;
      std::copy(f.node_features[static_cast<std::size_t>(i)].begin(),
                f.node_features[static_cast<std::size_t>(i)].end(),
                feats.begin() + (static_cast<std::size_t>(g) * n + i) * d0);
    }
    for (int r = 0; r < kBondTypes; ++r)
      for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.n; ++j)
          adj[((static_cast<std::size_t>(r) * b + g) * n + i) * n + j] =
              f.adjacency[static_cast<std::size_t>(r)][static_cast<std::size_t>(i) * f.n + j];
    const auto sf = supernode_features(item.mol, vocab);
    std::copy(sf.begin(), sf.end(), sfeat.begin() + static_cast<std::size_t>(g) * ds);
    for (int t = 0; t < t_width; ++t) {
      const bool present = t < static_cast<int>(item.label_present.size()) &&
                           item.label_present[static_cast<std::size_t>(t)];
      if (present) {
        labels[static_cast<std::size_t>(g) * t_width + t] = item.labels[static_cast<std::size_t>(t)];
        lmask[static_cast<std::size_t>(g) * t_width + t] = 1.0;
      }
    }
  }
  return assemble_batch(b, n, kBondTypes, d0, t_width, ds, std::move(feats), std::move(adj),
                        std::move(mask), std::move(sfeat), std::move(labels), std::move(lmask),
                        std::move(sizes));
}

}  // namespace gwm
