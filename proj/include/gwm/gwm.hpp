// Graph warp module: a supernode state g running alongside the host GNN,
// exchanging messages with the node states through an attention transmitter
// and sigmoid warp gates, merged recurrently. Two reduced variants cover the
// ablations: NoGate (trainable linear mixes, no main-side GRU) and
// SimpleSupernode (sum transmitter, no attention, no GRUs).
#pragma once

#include "gwm/featurize.hpp"
#include "gwm/gru.hpp"
#include "gwm/tensor.hpp"

#include <utility>
#include <vector>

namespace gwm {

enum class GwmVariant { Full, NoGate, SimpleSupernode };

inline const char* variant_name(GwmVariant v) {
  switch (v) {
    case GwmVariant::Full: return "full";
    case GwmVariant::NoGate: return "nogate";
    case GwmVariant::SimpleSupernode: return "simple";
  }
  return "?";
}

struct TransmitterParams {
  std::vector<Tensor> a;  // per head [D, Dp]: bilinear attention score vs g
  std::vector<Tensor> u;  // per head [D, Dp]: node projection
  Tensor w;               // [K*Dp, Dp]: head mixer
};

struct WarpGateParams {
  Tensor h, g, b;     // main side:  z   = sigmoid(hhat H + g2m G + b)
  Tensor hs, gs, bs;  // super side: z_s = sigmoid(m2s Hs + ghat Gs + bs)
};

struct GwmLayerParams {
  TransmitterParams tx;            // Full, NoGate
  Tensor w_simple;                 // SimpleSupernode: [D, Dp] sum transmitter
  Tensor f;                        // [Dp, D] super-to-main transmitter
  Tensor v;                        // [Dp, Dp] supernode self-message
  WarpGateParams gate;             // Full
  Tensor z1, z2, z1s, z2s;         // NoGate / SimpleSupernode linear mixes
  GruParams gru_main, gru_super;   // Full: both; NoGate: super side only
};

inline Tensor init_supernode(const Tensor& raw, const Tensor& embed_w, const Tensor& embed_b) {
  return add(matmul(raw, embed_w), embed_b);
}

// Attention aggregation of node states into a supernode message:
// alpha_{i,k} = softmax_i(h_i^T A_k g) over unmasked nodes,
// m_k = sum_i alpha_{i,k} U_k h_i, out = tanh(concat_k m_k W).
// Raises on a batch entry with every node masked.
inline Tensor transmit_main_to_super(const Tensor& h, const Tensor& g, const Tensor& mask,
                                     const TransmitterParams& p,
                                     std::vector<Tensor>* attention_out = nullptr) {
  const int n = h.dim(1);
  const int dp = g.dim(1);
  std::vector<Tensor> messages;
  messages.reserve(p.a.size());
  for (std::size_t k = 0; k < p.a.size(); ++k) {
    auto score = sum_axis(mul(matmul(h, p.a[k]), broadcast_middle(g, n)), 2);
    auto alpha = softmax_masked(score, mask, EmptyRows::Error);
    if (attention_out) attention_out->push_back(alpha);
    auto projected = matmul(h, p.u[k]);
    messages.push_back(sum_axis(mul(projected, broadcast_trailing(alpha, dp)), 1));
  }
  return gwm::tanh(matmul(concat(messages, 1), p.w));
}

inline Tensor transmit_super_to_main(const Tensor& g, const Tensor& f) {
  return gwm::tanh(matmul(g, f));
}

// Gated interpolation between the host message and the supernode
// transmission (and symmetrically on the supernode side).
// gates_out, when given, receives the main and super gate activations.
inline std::pair<Tensor, Tensor> warp_gate_merge(const Tensor& hhat, const Tensor& ghat,
                                                 const Tensor& g2m, const Tensor& m2s,
                                                 const WarpGateParams& p,
                                                 std::pair<Tensor, Tensor>* gates_out = nullptr) {
  const int n = hhat.dim(1);
  auto g2m_rows = broadcast_middle(matmul(g2m, p.g), n);
  auto z = sigmoid(add(add(matmul(hhat, p.h), g2m_rows), p.b));
  auto h0 = add(mul(one_minus(z), hhat), mul(z, broadcast_middle(g2m, n)));

  auto zs = sigmoid(add(add(matmul(m2s, p.hs), matmul(ghat, p.gs)), p.bs));
  auto g0 = add(mul(zs, m2s), mul(one_minus(zs), ghat));
  if (gates_out) *gates_out = {z, zs};
  return {h0, g0};
}

// One module step at layer l: consumes previous states and the host layer's
// message, returns the merged (h_l, g_l).
inline std::pair<Tensor, Tensor> gwm_step(const Tensor& h_prev, const Tensor& g_prev,
                                          const Tensor& main_message, const Tensor& mask,
                                          const GwmLayerParams& p, GwmVariant variant,
                                          std::vector<Tensor>* attention_out = nullptr) {
  const int n = h_prev.dim(1);
  const int d = h_prev.dim(2);
  auto ghat = gwm::tanh(matmul(g_prev, p.v));
  auto g2m = transmit_super_to_main(g_prev, p.f);

  if (variant == GwmVariant::SimpleSupernode) {
    auto masked_h = mul(h_prev, broadcast_trailing(mask, d));
    auto m2s = gwm::tanh(matmul(sum_axis(masked_h, 1), p.w_simple));
    auto h_out = add(matmul(main_message, p.z1), matmul(broadcast_middle(g2m, n), p.z2));
    auto g_out = add(matmul(m2s, p.z1s), matmul(ghat, p.z2s));
    return {h_out, g_out};
  }

  auto m2s = transmit_main_to_super(h_prev, g_prev, mask, p.tx, attention_out);
  if (variant == GwmVariant::NoGate) {
    auto h_out = add(matmul(main_message, p.z1), matmul(broadcast_middle(g2m, n), p.z2));
    auto g0 = add(matmul(m2s, p.z1s), matmul(ghat, p.z2s));
    return {h_out, gru_cell(g_prev, g0, p.gru_super)};
  }

  auto [h0, g0] = warp_gate_merge(main_message, ghat, g2m, m2s, p.gate);
  return {gru_cell(h_prev, h0, p.gru_main), gru_cell(g_prev, g0, p.gru_super)};
}

}  // namespace gwm
