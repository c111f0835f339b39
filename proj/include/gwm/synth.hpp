// Synthetic inputs: random graph batches for gradient and property checks,
// and the long-range benchmark dataset (trees and cycles labeled by the
// parity of their diameter, a property no fixed-radius message passing can
// read off locally).
#pragma once

#include "gwm/csv.hpp"
#include "gwm/featurize.hpp"
#include "gwm/rng.hpp"

#include <algorithm>
#include <queue>
#include <string>
#include <vector>

namespace gwm {

// Random padded batch: sizes in [n_min, n_max], features uniform in (-1, 1),
// each node pair wired with probability edge_prob and a uniform relation.
inline GraphBatch random_graph_batch(Rng& rng, int b, int n_min, int n_max, int relations,
                                     int d0, int t_width, int super_width,
                                     double edge_prob = 0.45) {
  std::vector<int> sizes;
  int n = 0;
  for (int g = 0; g < b; ++g) {
    sizes.push_back(rng.range(n_min, n_max));
    n = std::max(n, sizes.back());
  }
  std::vector<double> feats(static_cast<std::size_t>(b) * n * d0, 0.0);
  std::vector<double> adj(static_cast<std::size_t>(relations) * b * n * n, 0.0);
  std::vector<double> mask(static_cast<std::size_t>(b) * n, 0.0);
  std::vector<double> sfeat(static_cast<std::size_t>(b) * super_width, 0.0);
  std::vector<double> labels(static_cast<std::size_t>(b) * t_width, 0.0);
  std::vector<double> lmask(static_cast<std::size_t>(b) * t_width, 1.0);

  for (int g = 0; g < b; ++g) {
    const int ng = sizes[static_cast<std::size_t>(g)];
    for (int i = 0; i < ng; ++i) {
      mask[static_cast<std::size_t>(g) * n + i] = 1.0;
      for (int k = 0; k < d0; ++k)
        feats[(static_cast<std::size_t>(g) * n + i) * d0 + k] = rng.uniform(-1.0, 1.0);
    }
    for (int i = 0; i < ng; ++i)
      for (int j = i + 1; j < ng; ++j) {
        if (rng.uniform() >= edge_prob) continue;
        const int r = relations == 1 ? 0 : rng.range(0, relations - 1);
        adj[((static_cast<std::size_t>(r) * b + g) * n + i) * n + j] = 1.0;
        adj[((static_cast<std::size_t>(r) * b + g) * n + j) * n + i] = 1.0;
      }
    for (int k = 0; k < super_width; ++k)
      sfeat[static_cast<std::size_t>(g) * super_width + k] = rng.uniform(-1.0, 1.0);
    for (int t = 0; t < t_width; ++t)
      labels[static_cast<std::size_t>(g) * t_width + t] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  return assemble_batch(b, n, relations, d0, t_width, super_width, std::move(feats),
                        std::move(adj), std::move(mask), std::move(sfeat), std::move(labels),
                        std::move(lmask), std::move(sizes));
}

namespace detail_synth {

inline int graph_diameter(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  int diameter = 0;
  std::vector<int> dist(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(v);
        }
    }
    for (int d : dist) diameter = std::max(diameter, d);
  }
  return diameter;
}

// Renders an all-carbon tree as SMILES by depth-first traversal. Uniform
// atom labels keep the label signal purely topological: diameter parity
// stays unreadable from any local neighborhood.
inline std::string tree_to_smiles(const std::vector<std::vector<int>>& adj, int node, int parent) {
  std::string out = "C";
  std::vector<int> children;
  for (int v : adj[static_cast<std::size_t>(node)])
    if (v != parent) children.push_back(v);
  for (std::size_t c = 0; c < children.size(); ++c) {
    const std::string sub = tree_to_smiles(adj, children[c], node);
    if (c + 1 < children.size())
      out += "(" + sub + ")";
    else
      out += sub;
  }
  return out;
}

}  // namespace detail_synth

struct SynthItem {
  std::string smiles;
  int label = 0;  // diameter parity
};

// Random tree on n nodes with a tunable preference for path-like shapes:
// each new node attaches to the previous one with probability `chain_bias`,
// otherwise to a uniformly random earlier node. Low branching keeps
// diameters spread out instead of concentrating near log n.
inline SynthItem random_tree_item(Rng& rng, int n, double chain_bias = 0.75) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int v = 1; v < n; ++v) {
    const int u = (v == 1 || rng.uniform() < chain_bias) ? v - 1 : rng.range(0, v - 1);
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }
  SynthItem item;
  item.smiles = detail_synth::tree_to_smiles(adj, 0, -1);
  item.label = detail_synth::graph_diameter(adj) % 2;
  return item;
}

inline SynthItem cycle_item(int n) {
  std::string s = "C1";
  for (int i = 1; i < n; ++i) s += "C";
  s += "1";
  SynthItem item;
  item.smiles = s;
  item.label = (n / 2) % 2;  // cycle diameter = floor(n/2)
  return item;
}

struct SynthOptions {
  int count = 500;
  int min_nodes = 10;
  int max_nodes = 20;
  double cycle_fraction = 0.5;
  std::uint64_t seed = 0;
};

inline std::vector<SynthItem> make_longrange_items(const SynthOptions& opt) {
  if (opt.count < 1 || opt.min_nodes < 3 || opt.max_nodes < opt.min_nodes)
    throw DataError("synth: bad options");
  Rng rng(opt.seed);
  std::vector<SynthItem> items;
  items.reserve(static_cast<std::size_t>(opt.count));
  for (int i = 0; i < opt.count; ++i) {
    const int n = rng.range(opt.min_nodes, opt.max_nodes);
    if (rng.uniform() < opt.cycle_fraction)
      items.push_back(cycle_item(n));
    else
      items.push_back(random_tree_item(rng, n));
  }
  return items;
}

inline void write_longrange_csv(const std::string& path, const SynthOptions& opt) {
  std::vector<std::vector<std::string>> rows;
  for (const SynthItem& it : make_longrange_items(opt))
    rows.push_back({it.smiles, std::to_string(it.label)});
  write_csv(path, {"smiles", "diameter_parity"}, rows);
}

}  // namespace gwm
