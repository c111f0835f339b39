// Named finite-difference gradient checks for every differentiable
// component: the four host layers, the three warp-module variants, the
// readout head, and both losses. Shared by the gradcheck CLI subcommand and
// the acceptance harness.
#pragma once

#include "gwm/gradcheck.hpp"
#include "gwm/gwm.hpp"
#include "gwm/layers.hpp"
#include "gwm/losses.hpp"
#include "gwm/model.hpp"
#include "gwm/synth.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gwm {

struct GradSuiteReport {
  std::string component;
  bool ok = false;
  double max_rel_err = 0.0;
  std::string worst;
};

namespace detail_suite {

inline Tensor tracked_mat(int rows, int cols, Rng& rng) {
  return Tensor::parameter({rows, cols}, rng.glorot(rows, cols));
}

inline Tensor tracked_vec(int d, Rng& rng) {
  return Tensor::parameter({d}, rng.uniform_vec(static_cast<std::size_t>(d), -0.3, 0.3));
}

inline GruParams tracked_gru(int d, Rng& rng, std::vector<Tensor>& out) {
  GruParams g;
  g.wu = tracked_mat(d, d, rng);
  g.uu = tracked_mat(d, d, rng);
  g.bu = tracked_vec(d, rng);
  g.wr = tracked_mat(d, d, rng);
  g.ur = tracked_mat(d, d, rng);
  g.br = tracked_vec(d, rng);
  g.wc = tracked_mat(d, d, rng);
  g.uc = tracked_mat(d, d, rng);
  g.bc = tracked_vec(d, rng);
  for (const Tensor& t : {g.wu, g.uu, g.bu, g.wr, g.ur, g.br, g.wc, g.uc, g.bc})
    out.push_back(t);
  return g;
}

inline Tensor probe_sum(const Tensor& out, std::uint64_t probe_seed) {
  Rng rng(probe_seed);
  return sum_all(mul(out, Tensor::constant(out.shape(), rng.uniform_vec(out.size(), 0.1, 1.0))));
}

}  // namespace detail_suite

// Runs every component check on one shared batch of `graphs` random graphs
// of 4-10 nodes with D=4, K=2, R=2.
inline std::vector<GradSuiteReport> run_gradcheck_suite(std::uint64_t seed, double rel_tol = 1e-4,
                                                        int graphs = 10) {
  using detail_suite::probe_sum;
  using detail_suite::tracked_gru;
  using detail_suite::tracked_mat;
  using detail_suite::tracked_vec;

  const int d = 4, heads = 2, relations = 2, tasks = 2;
  Rng data_rng(seed);
  GraphBatch b = random_graph_batch(data_rng, graphs, 4, 10, relations, d, tasks, d);
  const int n = b.max_nodes();

  Rng rng(seed + 1);
  auto tracked_state = [&](std::vector<int> shape) {
    std::size_t count = 1;
    for (int s : shape) count *= static_cast<std::size_t>(s);
    return Tensor::parameter(shape, rng.uniform_vec(count, -1.0, 1.0));
  };

  std::vector<GradSuiteReport> reports;
  auto run_case = [&](const std::string& name, const std::function<Tensor()>& f,
                      const std::vector<Tensor>& params) {
    GradCheckResult res = grad_check(f, params, 1e-5, rel_tol);
    reports.push_back({name, res.ok, res.max_rel_err, res.worst});
  };

  {  // host: RSGCN
    RsgcnParams p;
    p.w = tracked_mat(d, d, rng);
    Tensor h = tracked_state({graphs, n, d});
    run_case("host.rsgcn", [&] { return probe_sum(rsgcn_layer(h, b, p), 11); }, {p.w, h});
  }
  {  // host: GGNN
    GgnnParams p;
    std::vector<Tensor> params;
    for (int r = 0; r < relations; ++r) p.wr.push_back(tracked_mat(d, d, rng));
    p.gru = tracked_gru(d, rng, params);
    params.push_back(p.wr[0]);
    params.push_back(p.wr[1]);
    Tensor h = tracked_state({graphs, n, d});
    params.push_back(h);
    run_case("host.ggnn", [&] { return probe_sum(ggnn_layer(h, b, p), 12); }, params);
  }
  {  // host: RGAT
    RgatParams p;
    std::vector<Tensor> params;
    for (int k = 0; k < heads; ++k) {
      p.f.push_back(tracked_mat(d, d, rng));
      p.g.push_back(tracked_mat(d, d, rng));
      p.a.emplace_back();
      for (int r = 0; r < relations; ++r) p.a.back().push_back(tracked_mat(d, d, rng));
      params.push_back(p.f.back());
      params.push_back(p.g.back());
      for (const Tensor& t : p.a.back()) params.push_back(t);
    }
    p.w = tracked_mat(heads * d, d, rng);
    params.push_back(p.w);
    Tensor h = tracked_state({graphs, n, d});
    params.push_back(h);
    run_case("host.rgat", [&] { return probe_sum(rgat_layer(h, b, p), 13); }, params);
  }
  {  // host: GIN (eval mode: dropout is not differentiated through)
    GinParams p;
    p.w1 = tracked_mat(d, d, rng);
    p.b1 = tracked_vec(d, rng);
    p.w2 = tracked_mat(d, d, rng);
    p.b2 = tracked_vec(d, rng);
    Tensor h = tracked_state({graphs, n, d});
    run_case("host.gin",
             [&] { return probe_sum(gin_layer(h, b, p, 0.0, false, nullptr), 14); },
             {p.w1, p.b1, p.w2, p.b2, h});
  }

  for (GwmVariant variant :
       {GwmVariant::Full, GwmVariant::NoGate, GwmVariant::SimpleSupernode}) {
    GwmLayerParams p;
    std::vector<Tensor> params;
    p.f = tracked_mat(d, d, rng);
    p.v = tracked_mat(d, d, rng);
    params.push_back(p.f);
    params.push_back(p.v);
    if (variant == GwmVariant::SimpleSupernode) {
      p.w_simple = tracked_mat(d, d, rng);
      params.push_back(p.w_simple);
    } else {
      for (int k = 0; k < heads; ++k) {
        p.tx.a.push_back(tracked_mat(d, d, rng));
        p.tx.u.push_back(tracked_mat(d, d, rng));
        params.push_back(p.tx.a.back());
        params.push_back(p.tx.u.back());
      }
      p.tx.w = tracked_mat(heads * d, d, rng);
      params.push_back(p.tx.w);
    }
    switch (variant) {
      case GwmVariant::Full:
        p.gate.h = tracked_mat(d, d, rng);
        p.gate.g = tracked_mat(d, d, rng);
        p.gate.b = tracked_vec(d, rng);
        p.gate.hs = tracked_mat(d, d, rng);
        p.gate.gs = tracked_mat(d, d, rng);
        p.gate.bs = tracked_vec(d, rng);
        for (const Tensor& t : {p.gate.h, p.gate.g, p.gate.b, p.gate.hs, p.gate.gs, p.gate.bs})
          params.push_back(t);
        p.gru_main = tracked_gru(d, rng, params);
        p.gru_super = tracked_gru(d, rng, params);
        break;
      case GwmVariant::NoGate:
        p.z1 = tracked_mat(d, d, rng);
        p.z2 = tracked_mat(d, d, rng);
        p.z1s = tracked_mat(d, d, rng);
        p.z2s = tracked_mat(d, d, rng);
        for (const Tensor& t : {p.z1, p.z2, p.z1s, p.z2s}) params.push_back(t);
        p.gru_super = tracked_gru(d, rng, params);
        break;
      case GwmVariant::SimpleSupernode:
        p.z1 = tracked_mat(d, d, rng);
        p.z2 = tracked_mat(d, d, rng);
        p.z1s = tracked_mat(d, d, rng);
        p.z2s = tracked_mat(d, d, rng);
        for (const Tensor& t : {p.z1, p.z2, p.z1s, p.z2s}) params.push_back(t);
        break;
    }
    Tensor h = tracked_state({graphs, n, d});
    Tensor g = tracked_state({graphs, d});
    Tensor msg = tracked_state({graphs, n, d});
    params.push_back(h);
    params.push_back(g);
    params.push_back(msg);
    run_case(std::string("gwm.") + variant_name(variant),
             [&] {
               auto [h1, g1] = gwm_step(h, g, msg, b.node_mask, p, variant);
               return add(probe_sum(h1, 15), probe_sum(g1, 16));
             },
             params);
  }

  {  // readout
    ReadoutParams p;
    p.agg_w = tracked_mat(d, d, rng);
    p.agg_b = tracked_vec(d, rng);
    p.out_w = tracked_mat(2 * d, tasks, rng);
    p.out_b = tracked_vec(tasks, rng);
    Tensor h = tracked_state({graphs, n, d});
    Tensor g = tracked_state({graphs, d});
    run_case("readout", [&] { return probe_sum(readout(h, g, b.node_mask, p), 17); },
             {p.agg_w, p.agg_b, p.out_w, p.out_b, h, g});
  }
  {  // losses on raw tracked predictions
    Tensor logits = tracked_state({graphs, tasks});
    run_case("loss.bce", [&] { return masked_bce_loss(logits, b.labels, b.label_mask); },
             {logits});
    Tensor pred = tracked_state({graphs, tasks});
    run_case("loss.mse", [&] { return masked_mse_loss(pred, b.labels, b.label_mask); }, {pred});
  }
  return reports;
}

// Maps a user-facing op name to the corresponding backward-rule kind, for
// fault-injection demonstrations.
inline std::optional<OpKind> op_kind_from_name(const std::string& s) {
  if (s == "matmul") return OpKind::MatMul;
  if (s == "bmm") return OpKind::Bmm;
  if (s == "add") return OpKind::Add;
  if (s == "mul") return OpKind::Mul;
  if (s == "tanh") return OpKind::Tanh;
  if (s == "sigmoid") return OpKind::Sigmoid;
  if (s == "relu") return OpKind::Relu;
  if (s == "softmax") return OpKind::SoftmaxMasked;
  if (s == "sum") return OpKind::SumReduce;
  if (s == "concat") return OpKind::Concat;
  if (s == "broadcast") return OpKind::Broadcast;
  if (s == "bce") return OpKind::BceLoss;
  if (s == "mse") return OpKind::MseLoss;
  return std::nullopt;
}

}  // namespace gwm
