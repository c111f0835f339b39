// Host GNN layers. Each consumes node states [B,N,D] plus the batch's
// adjacency structure and produces the layer's per-node message.
#pragma once

#include "gwm/featurize.hpp"
#include "gwm/gru.hpp"
#include "gwm/rng.hpp"
#include "gwm/tensor.hpp"

#include <vector>

namespace gwm {

struct RsgcnParams {
  Tensor w;  // [D, D]
};

// relu(A_norm h W) with A_norm the degree-normalized self-looped adjacency.
inline Tensor rsgcn_layer(const Tensor& h, const GraphBatch& b, const RsgcnParams& p) {
  return relu(bmm(b.norm_adjacency, matmul(h, p.w)));
}

struct GgnnParams {
  std::vector<Tensor> wr;  // per relation [D, D]
  GruParams gru;
};

inline Tensor ggnn_layer(const Tensor& h, const GraphBatch& b, const GgnnParams& p) {
  if (p.wr.size() != b.adj_rel.size())
    throw ShapeError("ggnn_layer: " + std::to_string(p.wr.size()) + " relation weights for " +
                     std::to_string(b.adj_rel.size()) + " relations");
  Tensor m;
  for (std::size_t r = 0; r < p.wr.size(); ++r) {
    auto part = matmul(bmm(b.adj_rel[r], h), p.wr[r]);
    m = m.defined() ? add(m, part) : part;
  }
  return gru_cell(h, m, p.gru);
}

struct RgatParams {
  std::vector<Tensor> f;               // per head [D, D], self link
  std::vector<Tensor> g;               // per head [D, D], neighbor projection
  std::vector<std::vector<Tensor>> a;  // [head][relation] bilinear [D, D]
  Tensor w;                            // [K*D, D] head mixer
};

// Per head k: scores s_ij = h_i^T A_{k,r(ij)} h_j over actual neighbors,
// alpha = row softmax, htilde_k = F_k h_i + sum_j alpha_ij G_k h_j.
// Output tanh(concat_k htilde_k W). Neighborless nodes keep only the self term.
// attention_out, when given, receives each head's alpha matrix.
inline Tensor rgat_layer(const Tensor& h, const GraphBatch& b, const RgatParams& p,
                         std::vector<Tensor>* attention_out = nullptr) {
  if (p.a.empty() || p.a[0].size() != b.adj_rel.size())
    throw ShapeError("rgat_layer: attention tensors do not match relation count");

  // 0/1 neighbor mask over all relations (each bond has exactly one type)
  Tensor edge_mask;
  for (const Tensor& rel : b.adj_rel)
    edge_mask = edge_mask.defined() ? add(edge_mask, rel) : rel;

  std::vector<Tensor> heads;
  heads.reserve(p.f.size());
  for (std::size_t k = 0; k < p.f.size(); ++k) {
    Tensor score;
    for (std::size_t r = 0; r < p.a[k].size(); ++r) {
      auto s_r = mul(bmm(matmul(h, p.a[k][r]), h, /*transpose_b=*/true), b.adj_rel[r]);
      score = score.defined() ? add(score, s_r) : s_r;
    }
    auto alpha = softmax_masked(score, edge_mask, EmptyRows::Zero);
    if (attention_out) attention_out->push_back(alpha);
    auto neighbor = bmm(alpha, matmul(h, p.g[k]));
    heads.push_back(add(matmul(h, p.f[k]), neighbor));
  }
  return gwm::tanh(matmul(concat(heads, 2), p.w));
}

struct GinParams {
  Tensor w1, b1, w2, b2;  // two-layer MLP, ReLU after each layer
};

// MLP((1+eps)h_i + sum_j h_j) with eps = 0; relations collapsed by summation.
// Dropout on the output, active only in training mode.
inline Tensor gin_layer(const Tensor& h, const GraphBatch& b, const GinParams& p,
                        double dropout_rate, bool training, Rng* rng) {
  auto x = add(h, bmm(b.total_adjacency, h));
  auto hidden = relu(add(matmul(x, p.w1), p.b1));
  auto out = relu(add(matmul(hidden, p.w2), p.b2));
  if (training && dropout_rate > 0.0) {
    if (!rng) throw NumericError("gin_layer: training-mode dropout needs an rng");
    std::vector<double> keep(out.size());
    const double scale = 1.0 / (1.0 - dropout_rate);
    for (double& v : keep) v = rng->uniform() < dropout_rate ? 0.0 : scale;
    out = mul(out, Tensor::constant(out.shape(), std::move(keep)));
  }
  return out;
}

}  // namespace gwm
