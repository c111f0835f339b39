// Full model: node embedding, L host layers with an optional warp module
// step after each, and the readout head. Parameters live in an ordered,
// named store so checkpoints and the optimizer see a stable flat list.
#pragma once

#include "gwm/featurize.hpp"
#include "gwm/gwm.hpp"
#include "gwm/layers.hpp"
#include "gwm/rng.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace gwm {

enum class HostKind { Rsgcn, Ggnn, Rgat, Gin };

inline const char* host_name(HostKind h) {
  switch (h) {
    case HostKind::Rsgcn: return "rsgcn";
    case HostKind::Ggnn: return "ggnn";
    case HostKind::Rgat: return "rgat";
    case HostKind::Gin: return "gin";
  }
  return "?";
}

inline std::optional<HostKind> host_from_name(const std::string& s) {
  if (s == "rsgcn") return HostKind::Rsgcn;
  if (s == "ggnn") return HostKind::Ggnn;
  if (s == "rgat") return HostKind::Rgat;
  if (s == "gin") return HostKind::Gin;
  return std::nullopt;
}

// variant "none" = host GNN alone (no supernode parameters at all)
inline std::optional<GwmVariant> variant_from_name(const std::string& s) {
  if (s == "full") return GwmVariant::Full;
  if (s == "nogate") return GwmVariant::NoGate;
  if (s == "simple") return GwmVariant::SimpleSupernode;
  return std::nullopt;
}

struct ModelConfig {
  HostKind host = HostKind::Rsgcn;
  std::optional<GwmVariant> variant;  // nullopt = vanilla host
  int layers = 3;
  int dim = 50;       // D; the supernode width D' equals D
  int heads = 8;      // K
  int relations = 4;  // R
  int tasks = 1;      // T
  bool classification = true;
  double dropout = 0.5;  // GIN only
  int node_feat_width = 0;
  int super_feat_width = 0;

  std::string variant_str() const { return variant ? variant_name(*variant) : "none"; }
};

class ParamStore {
 public:
  Tensor add(const std::string& name, std::vector<int> shape, Rng& rng) {
    if (shape.size() == 2)
      return insert(name, Tensor::parameter(shape, rng.glorot(shape[0], shape[1])));
    return insert(name, Tensor::zeros(shape, /*tracked=*/true));
  }

  Tensor insert(const std::string& name, Tensor t) {
    if (index_.count(name)) throw DataError("params: duplicate name " + name);
    index_[name] = tensors_.size();
    names_.push_back(name);
    tensors_.push_back(t);
    return t;
  }

  Tensor get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("params: no tensor named " + name);
    return tensors_[it->second];
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return tensors_.size(); }

  std::size_t value_count() const {
    std::size_t n = 0;
    for (const Tensor& t : tensors_) n += t.size();
    return n;
  }

  void zero_grad() {
    for (Tensor& t : tensors_) t.zero_grad();
  }

  // Overwrite values of every tensor whose name+shape also exists in `other`.
  void copy_matching_from(const ParamStore& other) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!other.has(names_[i])) continue;
      Tensor src = other.get(names_[i]);
      if (src.shape() != tensors_[i].shape()) continue;
      tensors_[i].values() = src.values();
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct HostLayer {
  RsgcnParams rsgcn;
  GgnnParams ggnn;
  RgatParams rgat;
  GinParams gin;
};

struct ReadoutParams {
  Tensor agg_w, agg_b;  // node aggregate map [D, D], [D]
  Tensor out_w, out_b;  // final mixer [(D + Dp), T], [T]
};

struct Model {
  ModelConfig cfg;
  ParamStore params;
  Tensor embed_w;                       // [node_feat_width, D], bias-free
  Tensor super_embed_w, super_embed_b;  // [super_feat_width, D], [D]
  std::vector<HostLayer> host_layers;
  std::vector<GwmLayerParams> gwm_layers;
  ReadoutParams readout;
};

namespace detail_model {

inline GruParams make_gru(ParamStore& ps, const std::string& prefix, int d_in, int d_state,
                          Rng& rng) {
  GruParams g;
  g.wu = ps.add(prefix + ".wu", {d_in, d_state}, rng);
  g.uu = ps.add(prefix + ".uu", {d_state, d_state}, rng);
  g.bu = ps.add(prefix + ".bu", {d_state}, rng);
  g.wr = ps.add(prefix + ".wr", {d_in, d_state}, rng);
  g.ur = ps.add(prefix + ".ur", {d_state, d_state}, rng);
  g.br = ps.add(prefix + ".br", {d_state}, rng);
  g.wc = ps.add(prefix + ".wc", {d_in, d_state}, rng);
  g.uc = ps.add(prefix + ".uc", {d_state, d_state}, rng);
  g.bc = ps.add(prefix + ".bc", {d_state}, rng);
  return g;
}

}  // namespace detail_model

inline Model make_model(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.layers < 1 || cfg.dim < 1 || cfg.heads < 1 || cfg.relations < 1 || cfg.tasks < 1)
    throw DataError("model: layers, dim, heads, relations and tasks must be positive");
  if (cfg.node_feat_width < 1 || (cfg.variant && cfg.super_feat_width < 1))
    throw DataError("model: input feature widths not set");

  Model m;
  m.cfg = cfg;
  Rng rng(seed);
  const int d = cfg.dim;

  m.embed_w = m.params.add("embed.w", {cfg.node_feat_width, d}, rng);

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string lp = "layer" + std::to_string(l) + ".host";
    HostLayer host;
    switch (cfg.host) {
      case HostKind::Rsgcn:
        host.rsgcn.w = m.params.add(lp + ".w", {d, d}, rng);
        break;
      case HostKind::Ggnn:
        for (int r = 0; r < cfg.relations; ++r)
          host.ggnn.wr.push_back(m.params.add(lp + ".wr" + std::to_string(r), {d, d}, rng));
        host.ggnn.gru = detail_model::make_gru(m.params, lp + ".gru", d, d, rng);
        break;
      case HostKind::Rgat:
        for (int k = 0; k < cfg.heads; ++k) {
          const std::string kp = lp + ".k" + std::to_string(k);
          host.rgat.f.push_back(m.params.add(kp + ".f", {d, d}, rng));
          host.rgat.g.push_back(m.params.add(kp + ".g", {d, d}, rng));
          host.rgat.a.emplace_back();
          for (int r = 0; r < cfg.relations; ++r)
            host.rgat.a.back().push_back(m.params.add(kp + ".a" + std::to_string(r), {d, d}, rng));
        }
        host.rgat.w = m.params.add(lp + ".w", {cfg.heads * d, d}, rng);
        break;
      case HostKind::Gin:
        host.gin.w1 = m.params.add(lp + ".w1", {d, d}, rng);
        host.gin.b1 = m.params.add(lp + ".b1", {d}, rng);
        host.gin.w2 = m.params.add(lp + ".w2", {d, d}, rng);
        host.gin.b2 = m.params.add(lp + ".b2", {d}, rng);
        break;
    }
    m.host_layers.push_back(std::move(host));
  }

  if (cfg.variant) {
    m.super_embed_w = m.params.add("super_embed.w", {cfg.super_feat_width, d}, rng);
    m.super_embed_b = m.params.add("super_embed.b", {d}, rng);
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string lp = "layer" + std::to_string(l) + ".gwm";
      GwmLayerParams gp;
      gp.f = m.params.add(lp + ".f", {d, d}, rng);
      gp.v = m.params.add(lp + ".v", {d, d}, rng);
      if (*cfg.variant == GwmVariant::SimpleSupernode) {
        gp.w_simple = m.params.add(lp + ".w_simple", {d, d}, rng);
      } else {
        for (int k = 0; k < cfg.heads; ++k) {
          gp.tx.a.push_back(m.params.add(lp + ".tx.a" + std::to_string(k), {d, d}, rng));
          gp.tx.u.push_back(m.params.add(lp + ".tx.u" + std::to_string(k), {d, d}, rng));
        }
        gp.tx.w = m.params.add(lp + ".tx.w", {cfg.heads * d, d}, rng);
      }
      switch (*cfg.variant) {
        case GwmVariant::Full:
          gp.gate.h = m.params.add(lp + ".gate.h", {d, d}, rng);
          gp.gate.g = m.params.add(lp + ".gate.g", {d, d}, rng);
          gp.gate.b = m.params.add(lp + ".gate.b", {d}, rng);
          gp.gate.hs = m.params.add(lp + ".gate.hs", {d, d}, rng);
          gp.gate.gs = m.params.add(lp + ".gate.gs", {d, d}, rng);
          gp.gate.bs = m.params.add(lp + ".gate.bs", {d}, rng);
          gp.gru_main = detail_model::make_gru(m.params, lp + ".gru_main", d, d, rng);
          gp.gru_super = detail_model::make_gru(m.params, lp + ".gru_super", d, d, rng);
          break;
        case GwmVariant::NoGate:
          gp.z1 = m.params.add(lp + ".z1", {d, d}, rng);
          gp.z2 = m.params.add(lp + ".z2", {d, d}, rng);
          gp.z1s = m.params.add(lp + ".z1s", {d, d}, rng);
          gp.z2s = m.params.add(lp + ".z2s", {d, d}, rng);
          gp.gru_super = detail_model::make_gru(m.params, lp + ".gru_super", d, d, rng);
          break;
        case GwmVariant::SimpleSupernode:
          gp.z1 = m.params.add(lp + ".z1", {d, d}, rng);
          gp.z2 = m.params.add(lp + ".z2", {d, d}, rng);
          gp.z1s = m.params.add(lp + ".z1s", {d, d}, rng);
          gp.z2s = m.params.add(lp + ".z2s", {d, d}, rng);
          break;
      }
      m.gwm_layers.push_back(std::move(gp));
    }
  }

  m.readout.agg_w = m.params.add("readout.agg_w", {d, d}, rng);
  m.readout.agg_b = m.params.add("readout.agg_b", {d}, rng);
  m.readout.out_w = m.params.add("readout.out_w", {2 * d, cfg.tasks}, rng);
  m.readout.out_b = m.params.add("readout.out_b", {cfg.tasks}, rng);
  return m;
}

// r = DNN_r1(concat[DNN_r2(H_L), g_L]); DNN_r2 = masked node sum, then linear.
inline Tensor readout(const Tensor& h, const Tensor& g, const Tensor& mask,
                      const ReadoutParams& p) {
  const int d = h.dim(2);
  auto summed = sum_axis(mul(h, broadcast_trailing(mask, d)), 1);
  auto agg = add(matmul(summed, p.agg_w), p.agg_b);
  return add(matmul(concat({agg, g}, 1), p.out_w), p.out_b);
}

// Runs the host layer for layer l on state h.
inline Tensor host_layer_forward(const Model& m, int l, const Tensor& h, const GraphBatch& b,
                                 bool training, Rng* rng) {
  const HostLayer& hl = m.host_layers[static_cast<std::size_t>(l)];
  switch (m.cfg.host) {
    case HostKind::Rsgcn: return rsgcn_layer(h, b, hl.rsgcn);
    case HostKind::Ggnn: return ggnn_layer(h, b, hl.ggnn);
    case HostKind::Rgat: return rgat_layer(h, b, hl.rgat);
    case HostKind::Gin: return gin_layer(h, b, hl.gin, m.cfg.dropout, training, rng);
  }
  throw DataError("model: unknown host");
}

struct ForwardTrace {
  Tensor predictions;  // [B, T]
  Tensor final_h;      // [B, N, D]
  Tensor final_g;      // [B, D] (zeros tensor when variant is none)
};

inline ForwardTrace model_forward_traced(const Model& m, const GraphBatch& b, bool training,
                                         Rng* rng = nullptr) {
  if (static_cast<int>(b.adj_rel.size()) != m.cfg.relations)
    throw ShapeError("model: batch has " + std::to_string(b.adj_rel.size()) +
                     " relations, config expects " + std::to_string(m.cfg.relations));
  Tensor h = matmul(b.node_features, m.embed_w);

  ForwardTrace tr;
  if (!m.cfg.variant) {
    for (int l = 0; l < m.cfg.layers; ++l) h = host_layer_forward(m, l, h, b, training, rng);
    tr.final_g = Tensor::zeros({b.batch_size(), m.cfg.dim});
  } else {
    Tensor g = init_supernode(b.supernode_features, m.super_embed_w, m.super_embed_b);
    for (int l = 0; l < m.cfg.layers; ++l) {
      Tensor message = host_layer_forward(m, l, h, b, training, rng);
      auto [h_next, g_next] = gwm_step(h, g, message, b.node_mask,
                                       m.gwm_layers[static_cast<std::size_t>(l)], *m.cfg.variant);
      h = h_next;
      g = g_next;
    }
    tr.final_g = g;
  }
  tr.final_h = h;
  tr.predictions = readout(h, tr.final_g, b.node_mask, m.readout);
  return tr;
}

inline Tensor model_forward(const Model& m, const GraphBatch& b, bool training,
                            Rng* rng = nullptr) {
  return model_forward_traced(m, b, training, rng).predictions;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic + version, then (name, shape, row-major doubles) per
// tensor in store order.

inline void save_checkpoint(const std::string& path, const ParamStore& ps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  const char magic[8] = {'G', 'W', 'M', 'C', 'K', 'P', 'T', '1'};
  out.write(magic, 8);
  const std::uint64_t count = ps.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string& name = ps.names()[i];
    const Tensor& t = ps.tensors()[i];
    const std::uint64_t name_len = name.size();
    out.write(reinterpret_cast<const char*>(&name_len), 8);
    out.write(name.data(), static_cast<std::streamsize>(name_len));
    const std::uint32_t rank = static_cast<std::uint32_t>(t.rank());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (int dim : t.shape()) {
      const std::uint32_t d32 = static_cast<std::uint32_t>(dim);
      out.write(reinterpret_cast<const char*>(&d32), 4);
    }
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
}

inline void load_checkpoint(const std::string& path, ParamStore& ps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "GWMCKPT1")
    throw DataError("checkpoint: bad header in " + path);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  if (count != ps.size())
    throw DataError("checkpoint: holds " + std::to_string(count) + " tensors, model has " +
                    std::to_string(ps.size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), 8);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    std::uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    std::vector<int> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) {
      std::uint32_t d32 = 0;
      in.read(reinterpret_cast<char*>(&d32), 4);
      shape[d] = static_cast<int>(d32);
    }
    if (!ps.has(name)) throw DataError("checkpoint: unknown tensor " + name);
    Tensor t = ps.get(name);
    if (t.shape() != shape)
      throw DataError("checkpoint: shape mismatch for " + name + ": file " +
                      detail::shape_str(shape) + " vs model " + detail::shape_str(t.shape()));
    in.read(reinterpret_cast<char*>(t.values().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated file " + path);
  }
}

}  // namespace gwm
