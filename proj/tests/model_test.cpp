// Whole-model contracts: forward shapes across every host/variant pairing,
// permutation invariance of graph-level predictions, parameter-store naming
// and modularity, the reduced-variant equivalence to a vanilla host, header
// and shape validation of checkpoints, and an end-to-end gradient check.
#include "gwm/gradcheck.hpp"
#include "gwm/losses.hpp"
#include "gwm/model.hpp"
#include "gwm/synth.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace gwm;

ModelConfig small_config(HostKind host, std::optional<GwmVariant> variant, int d0, int ds) {
  ModelConfig cfg;
  cfg.host = host;
  cfg.variant = variant;
  cfg.layers = 2;
  cfg.dim = 4;
  cfg.heads = 2;
  cfg.relations = 2;
  cfg.tasks = 2;
  cfg.node_feat_width = d0;
  cfg.super_feat_width = ds;
  return cfg;
}

GraphBatch small_batch(Rng& rng, int b = 3) {
  return random_graph_batch(rng, b, 2, 5, 2, /*d0=*/3, /*t_width=*/2, /*super_width=*/6);
}

void set_identity(Tensor t) {
  const int d = t.dim(0);
  std::fill(t.values().begin(), t.values().end(), 0.0);
  for (int i = 0; i < d; ++i) t.values()[static_cast<std::size_t>(i) * d + i] = 1.0;
}

void set_zero(Tensor t) { std::fill(t.values().begin(), t.values().end(), 0.0); }

TEST(Model, ForwardShapesForEveryHostAndVariant) {
  Rng rng(211);
  GraphBatch b = small_batch(rng);
  const std::optional<GwmVariant> variants[] = {std::nullopt, GwmVariant::Full,
                                                GwmVariant::NoGate, GwmVariant::SimpleSupernode};
  for (HostKind host : {HostKind::Rsgcn, HostKind::Ggnn, HostKind::Rgat, HostKind::Gin})
    for (const auto& variant : variants) {
      Model m = make_model(small_config(host, variant, 3, 6), 5);
      ForwardTrace tr = model_forward_traced(m, b, /*training=*/false);
      EXPECT_EQ(tr.predictions.shape(), (std::vector<int>{b.batch_size(), 2}));
      EXPECT_EQ(tr.final_h.shape(), (std::vector<int>{b.batch_size(), b.max_nodes(), 4}));
      EXPECT_EQ(tr.final_g.shape(), (std::vector<int>{b.batch_size(), 4}));
      for (double v : tr.predictions.values()) EXPECT_TRUE(std::isfinite(v));
    }
}

TEST(Model, ForwardIsDeterministicInEvalMode) {
  Rng rng(223);
  GraphBatch b = small_batch(rng);
  Model m = make_model(small_config(HostKind::Gin, GwmVariant::Full, 3, 6), 9);
  Tensor p1 = model_forward(m, b, false);
  Tensor p2 = model_forward(m, b, false);
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(p1.values()[i], p2.values()[i]);
}

TEST(Model, SameSeedSameParametersDifferentSeedDiffers) {
  ModelConfig cfg = small_config(HostKind::Rgat, GwmVariant::Full, 3, 6);
  Model a = make_model(cfg, 31);
  Model b = make_model(cfg, 31);
  Model c = make_model(cfg, 32);
  ASSERT_EQ(a.params.size(), b.params.size());
  ASSERT_EQ(a.params.names(), b.params.names());
  for (std::size_t i = 0; i < a.params.size(); ++i)
    EXPECT_EQ(a.params.tensors()[i].values(), b.params.tensors()[i].values());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params.size(); ++i)
    if (a.params.tensors()[i].values() != c.params.tensors()[i].values()) any_diff = true;
  EXPECT_TRUE(any_diff);
}

TEST(Model, HostParametersAreAPrefixSharedWithVanilla) {
  // A gwm-equipped model owns every parameter of the vanilla host model
  // under the same name and shape, plus the module's own parameters.
  ModelConfig vanilla_cfg = small_config(HostKind::Ggnn, std::nullopt, 3, 6);
  ModelConfig full_cfg = small_config(HostKind::Ggnn, GwmVariant::Full, 3, 6);
  Model vanilla = make_model(vanilla_cfg, 1);
  Model full = make_model(full_cfg, 2);
  for (const std::string& name : vanilla.params.names()) {
    ASSERT_TRUE(full.params.has(name)) << name;
    EXPECT_EQ(full.params.get(name).shape(), vanilla.params.get(name).shape());
  }
  EXPECT_GT(full.params.value_count(), vanilla.params.value_count());
}

TEST(Model, PredictionsInvariantUnderNodePermutation) {
  Rng rng(227);
  const int n = 6;
  GraphBatch b = random_graph_batch(rng, 2, n, n, 2, 3, 2, 6);
  const std::vector<int> perm{4, 0, 3, 5, 1, 2};
  // permute every per-node structure
  const int bsz = 2, d0 = 3, relations = 2;
  std::vector<double> feats(b.node_features.size()), adj(b.adjacency.size()),
      mask(b.node_mask.size());
  for (int g = 0; g < bsz; ++g)
    for (int i = 0; i < n; ++i) {
      const int pi = perm[static_cast<std::size_t>(i)];
      mask[static_cast<std::size_t>(g) * n + pi] = b.node_mask.at({g, i});
      for (int k = 0; k < d0; ++k)
        feats[(static_cast<std::size_t>(g) * n + pi) * d0 + k] = b.node_features.at({g, i, k});
      for (int r = 0; r < relations; ++r)
        for (int j = 0; j < n; ++j)
          adj[((static_cast<std::size_t>(r) * bsz + g) * n + pi) * n +
              perm[static_cast<std::size_t>(j)]] = b.adjacency.at({r, g, i, j});
    }
  GraphBatch pb = assemble_batch(bsz, n, relations, d0, 2, 6, std::move(feats), std::move(adj),
                                 std::move(mask), b.supernode_features.values(),
                                 b.labels.values(), b.label_mask.values(), b.sizes);
  const std::optional<GwmVariant> variants[] = {std::nullopt, GwmVariant::Full,
                                                GwmVariant::NoGate, GwmVariant::SimpleSupernode};
  for (HostKind host : {HostKind::Rsgcn, HostKind::Ggnn, HostKind::Rgat, HostKind::Gin})
    for (const auto& variant : variants) {
      Model m = make_model(small_config(host, variant, 3, 6), 13);
      Tensor p1 = model_forward(m, b, false);
      Tensor p2 = model_forward(m, pb, false);
      for (std::size_t i = 0; i < p1.size(); ++i)
        EXPECT_NEAR(p1.values()[i], p2.values()[i], 1e-9)
            << host_name(host) << "/" << (variant ? variant_name(*variant) : "none");
    }
}

TEST(Model, ReadoutIgnoresMaskedRows) {
  Rng rng(229);
  const int d = 4, n = 5, bsz = 2;
  std::vector<double> hv = rng.uniform_vec(static_cast<std::size_t>(bsz) * n * d, -1.0, 1.0);
  std::vector<double> hj = hv;
  // graph 0 has 3 real nodes, graph 1 has 4; junk the padded tail rows
  std::vector<double> mask{1, 1, 1, 0, 0, 1, 1, 1, 1, 0};
  for (int k = 0; k < d; ++k) {
    hj[(static_cast<std::size_t>(0) * n + 3) * d + static_cast<std::size_t>(k)] = 31.0;
    hj[(static_cast<std::size_t>(0) * n + 4) * d + static_cast<std::size_t>(k)] = -17.0;
    hj[(static_cast<std::size_t>(1) * n + 4) * d + static_cast<std::size_t>(k)] = 23.0;
  }
  ReadoutParams p;
  Rng prng(233);
  p.agg_w = Tensor::constant({d, d}, prng.uniform_vec(16, -1.0, 1.0));
  p.agg_b = Tensor::constant({d}, prng.uniform_vec(4, -1.0, 1.0));
  p.out_w = Tensor::constant({2 * d, 3}, prng.uniform_vec(24, -1.0, 1.0));
  p.out_b = Tensor::constant({3}, prng.uniform_vec(3, -1.0, 1.0));
  Tensor g = Tensor::constant({bsz, d}, prng.uniform_vec(8, -1.0, 1.0));
  Tensor maskt = Tensor::constant({bsz, n}, mask);
  Tensor o1 = readout(Tensor::constant({bsz, n, d}, hv), g, maskt, p);
  Tensor o2 = readout(Tensor::constant({bsz, n, d}, hj), g, maskt, p);
  for (std::size_t i = 0; i < o1.size(); ++i) EXPECT_EQ(o1.values()[i], o2.values()[i]);
}

TEST(Model, ReadoutAggregateIsLinearInNodeSum) {
  // Splitting one node's state across two nodes cannot change the readout:
  // it only sees the masked sum.
  const int d = 3;
  ReadoutParams p;
  Rng prng(239);
  p.agg_w = Tensor::constant({d, d}, prng.uniform_vec(9, -1.0, 1.0));
  p.agg_b = Tensor::constant({d}, prng.uniform_vec(3, -1.0, 1.0));
  p.out_w = Tensor::constant({2 * d, 1}, prng.uniform_vec(6, -1.0, 1.0));
  p.out_b = Tensor::constant({1}, prng.uniform_vec(1, -1.0, 1.0));
  Tensor g = Tensor::constant({1, d}, prng.uniform_vec(3, -1.0, 1.0));
  Tensor mask = Tensor::constant({1, 2}, {1.0, 1.0});
  Tensor whole = Tensor::constant({1, 2, d}, {0.9, -0.3, 0.4, 0.0, 0.0, 0.0});
  Tensor split = Tensor::constant({1, 2, d}, {0.5, -0.3, 0.4, 0.4, 0.0, 0.0});
  Tensor o1 = readout(whole, g, mask, p);
  Tensor o2 = readout(split, g, mask, p);
  for (std::size_t i = 0; i < o1.size(); ++i)
    EXPECT_NEAR(o1.values()[i], o2.values()[i], 1e-14);
}

TEST(Model, SimpleVariantWithIdentityMixesEqualsVanillaHost) {
  // Z1 = I, Z2 = 0 on the main path, Z1s = 0, Z2s = I on the super path,
  // V = 0 and a zeroed supernode embedding: the module becomes inert and the
  // model must reproduce the vanilla host bit for bit.
  Rng rng(241);
  GraphBatch b = small_batch(rng, 4);
  for (HostKind host : {HostKind::Rsgcn, HostKind::Ggnn, HostKind::Rgat, HostKind::Gin}) {
    Model vanilla = make_model(small_config(host, std::nullopt, 3, 6), 17);
    Model simple = make_model(small_config(host, GwmVariant::SimpleSupernode, 3, 6), 18);
    simple.params.copy_matching_from(vanilla.params);
    set_zero(simple.params.get("super_embed.w"));
    set_zero(simple.params.get("super_embed.b"));
    for (int l = 0; l < 2; ++l) {
      const std::string lp = "layer" + std::to_string(l) + ".gwm";
      set_identity(simple.params.get(lp + ".z1"));
      set_zero(simple.params.get(lp + ".z2"));
      set_zero(simple.params.get(lp + ".z1s"));
      set_identity(simple.params.get(lp + ".z2s"));
      set_zero(simple.params.get(lp + ".v"));
    }
    Tensor pv = model_forward(vanilla, b, false);
    Tensor ps = model_forward(simple, b, false);
    for (std::size_t i = 0; i < pv.size(); ++i)
      EXPECT_EQ(pv.values()[i], ps.values()[i]) << host_name(host);
  }
}

TEST(Model, FullVariantGradientsMatchFiniteDifferences) {
  Rng rng(251);
  GraphBatch b = random_graph_batch(rng, 2, 2, 3, 2, 2, 1, 3);
  ModelConfig cfg;
  cfg.host = HostKind::Rsgcn;
  cfg.variant = GwmVariant::Full;
  cfg.layers = 1;
  cfg.dim = 2;
  cfg.heads = 1;
  cfg.relations = 2;
  cfg.tasks = 1;
  cfg.node_feat_width = 2;
  cfg.super_feat_width = 3;
  Model m = make_model(cfg, 19);
  auto res = grad_check(
      [&] { return masked_bce_loss(model_forward(m, b, false), b.labels, b.label_mask); },
      m.params.tensors(), 1e-5, 1e-4);
  EXPECT_TRUE(res.ok) << res.worst;
}

TEST(Model, RejectsRelationCountMismatch) {
  Rng rng(257);
  GraphBatch b = random_graph_batch(rng, 2, 3, 4, 3, 3, 2, 6);  // 3 relations
  Model m = make_model(small_config(HostKind::Rsgcn, GwmVariant::Full, 3, 6), 23);
  EXPECT_THROW(model_forward(m, b, false), ShapeError);
}

TEST(Model, RejectsInvalidConfig) {
  ModelConfig cfg = small_config(HostKind::Rsgcn, GwmVariant::Full, 3, 6);
  cfg.layers = 0;
  EXPECT_THROW(make_model(cfg, 1), DataError);
  cfg = small_config(HostKind::Rsgcn, GwmVariant::Full, 0, 6);
  EXPECT_THROW(make_model(cfg, 1), DataError);
  cfg = small_config(HostKind::Rsgcn, GwmVariant::Full, 3, 0);
  EXPECT_THROW(make_model(cfg, 1), DataError);
  // vanilla host needs no supernode features
  cfg = small_config(HostKind::Rsgcn, std::nullopt, 3, 0);
  EXPECT_NO_THROW(make_model(cfg, 1));
}

TEST(ParamStore, DuplicateAndMissingNamesThrow) {
  ParamStore ps;
  Rng rng(263);
  ps.add("a", {2, 2}, rng);
  EXPECT_THROW(ps.add("a", {2, 2}, rng), DataError);
  EXPECT_THROW(ps.get("b"), DataError);
  EXPECT_TRUE(ps.has("a"));
  EXPECT_FALSE(ps.has("b"));
  EXPECT_EQ(ps.value_count(), 4u);
}

TEST(Checkpoint, RoundTripRestoresEveryValue) {
  ModelConfig cfg = small_config(HostKind::Rgat, GwmVariant::NoGate, 3, 6);
  Model m = make_model(cfg, 29);
  std::vector<std::vector<double>> before;
  for (const Tensor& t : m.params.tensors()) before.push_back(t.values());
  const std::string path = std::string(::testing::TempDir()) + "/ckpt_roundtrip.bin";
  save_checkpoint(path, m.params);
  for (const Tensor& t : m.params.tensors())
    for (double& v : const_cast<Tensor&>(t).values()) v += 1.5;
  load_checkpoint(path, m.params);
  for (std::size_t i = 0; i < before.size(); ++i)
    EXPECT_EQ(m.params.tensors()[i].values(), before[i]);
  std::remove(path.c_str());
}

TEST(Checkpoint, RejectsBadHeaderWrongCountAndShapeMismatch) {
  ModelConfig cfg = small_config(HostKind::Rsgcn, std::nullopt, 3, 0);
  Model m = make_model(cfg, 37);
  const std::string dir = ::testing::TempDir();

  const std::string garbage = dir + "/ckpt_garbage.bin";
  {
    std::ofstream out(garbage, std::ios::binary);
    out << "not a checkpoint at all";
  }
  EXPECT_THROW(load_checkpoint(garbage, m.params), DataError);
  EXPECT_THROW(load_checkpoint(dir + "/ckpt_missing.bin", m.params), DataError);

  // a checkpoint from a differently-shaped model must be refused
  ModelConfig other = cfg;
  other.dim = 5;
  Model m2 = make_model(other, 37);
  const std::string mismatched = dir + "/ckpt_mismatch.bin";
  save_checkpoint(mismatched, m2.params);
  EXPECT_THROW(load_checkpoint(mismatched, m.params), DataError);

  // truncated file
  const std::string good = dir + "/ckpt_good.bin";
  save_checkpoint(good, m.params);
  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::string truncated = dir + "/ckpt_truncated.bin";
  {
    std::ofstream out(truncated, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
  }
  EXPECT_THROW(load_checkpoint(truncated, m.params), DataError);
  for (const std::string& p : {garbage, mismatched, good, truncated}) std::remove(p.c_str());
}

TEST(Checkpoint, RoundTripSurvivesTrainingStatePerturbation) {
  // save -> keep training -> load must bit-restore predictions
  Rng rng(269);
  GraphBatch b = small_batch(rng);
  Model m = make_model(small_config(HostKind::Ggnn, GwmVariant::Full, 3, 6), 41);
  Tensor before = model_forward(m, b, false);
  const std::string path = std::string(::testing::TempDir()) + "/ckpt_preds.bin";
  save_checkpoint(path, m.params);
  for (const Tensor& t : m.params.tensors())
    for (double& v : const_cast<Tensor&>(t).values()) v *= 0.9;
  load_checkpoint(path, m.params);
  Tensor after = model_forward(m, b, false);
  for (std::size_t i = 0; i < before.size(); ++i)
    EXPECT_EQ(before.values()[i], after.values()[i]);
  std::remove(path.c_str());
}

TEST(Model, NameLookupsForHostAndVariant) {
  EXPECT_EQ(host_from_name("rsgcn"), HostKind::Rsgcn);
  EXPECT_EQ(host_from_name("ggnn"), HostKind::Ggnn);
  EXPECT_EQ(host_from_name("rgat"), HostKind::Rgat);
  EXPECT_EQ(host_from_name("gin"), HostKind::Gin);
  EXPECT_FALSE(host_from_name("gcn").has_value());
  EXPECT_EQ(variant_from_name("full"), GwmVariant::Full);
  EXPECT_EQ(variant_from_name("nogate"), GwmVariant::NoGate);
  EXPECT_EQ(variant_from_name("simple"), GwmVariant::SimpleSupernode);
  EXPECT_FALSE(variant_from_name("none").has_value());
  ModelConfig cfg;
  cfg.variant = std::nullopt;
  EXPECT_EQ(cfg.variant_str(), "none");
  cfg.variant = GwmVariant::Full;
  EXPECT_EQ(cfg.variant_str(), "full");
}

}  // namespace
