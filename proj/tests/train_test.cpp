// Loss/metric oracles, Adam update contracts, the gradient-check suite, and
// the training loop's determinism, convergence, and serialization behavior.
#include "gwm/gradcheck_suite.hpp"
#include "gwm/smiles.hpp"
#include "gwm/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace gwm;

constexpr double kLn2 = 0.69314718055994530942;

Tensor ones_like(const Tensor& t) {
  return Tensor::constant(t.shape(), std::vector<double>(t.size(), 1.0));
}

// ---------------------------------------------------------------------------
// Binary cross-entropy

TEST(BceLoss, LogitZeroLabelOneIsLn2) {
  Tensor logits = Tensor::constant({1, 1}, {0.0});
  Tensor labels = Tensor::constant({1, 1}, {1.0});
  Tensor loss = masked_bce_loss(logits, labels, ones_like(logits));
  EXPECT_NEAR(loss.item(), kLn2, 1e-15);
}

TEST(BceLoss, SaturatedCorrectLogitVanishes) {
  Tensor logits = Tensor::constant({1, 1}, {20.0});
  Tensor labels = Tensor::constant({1, 1}, {1.0});
  EXPECT_LT(masked_bce_loss(logits, labels, ones_like(logits)).item(), 1e-8);
}

TEST(BceLoss, ExtremeLogitsStayFinite) {
  Tensor logits = Tensor::constant({1, 4}, {500.0, -500.0, 500.0, -500.0});
  Tensor labels = Tensor::constant({1, 4}, {0.0, 1.0, 1.0, 0.0});
  const double v = masked_bce_loss(logits, labels, ones_like(logits)).item();
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 250.0, 1e-9);  // two perfect, two maximally wrong
}

TEST(BceLoss, MaskedEntriesAreExcluded) {
  Tensor logits = Tensor::constant({2, 2}, {0.0, 99.0, 0.0, -99.0});
  Tensor labels = Tensor::constant({2, 2}, {1.0, 0.0, 0.0, 1.0});
  Tensor mask = Tensor::constant({2, 2}, {1.0, 0.0, 1.0, 0.0});
  EXPECT_NEAR(masked_bce_loss(logits, labels, mask).item(), kLn2, 1e-15);
}

TEST(BceLoss, AllTrueMaskEqualsUnmaskedForm) {
  Rng rng(301);
  Tensor logits = Tensor::constant({3, 4}, rng.uniform_vec(12, -3.0, 3.0));
  std::vector<double> y(12);
  for (double& v : y) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  Tensor labels = Tensor::constant({3, 4}, y);
  double manual = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    const double x = logits.values()[i];
    const double sig = 1.0 / (1.0 + std::exp(-x));
    manual += -(y[i] * std::log(sig) + (1.0 - y[i]) * std::log(1.0 - sig));
  }
  EXPECT_NEAR(masked_bce_loss(logits, labels, ones_like(logits)).item(), manual / 12.0, 1e-12);
}

TEST(BceLoss, AllMaskedThrows) {
  Tensor logits = Tensor::constant({1, 2}, {0.0, 0.0});
  Tensor labels = Tensor::constant({1, 2}, {1.0, 0.0});
  Tensor mask = Tensor::constant({1, 2}, {0.0, 0.0});
  EXPECT_THROW(masked_bce_loss(logits, labels, mask), LossError);
}

TEST(BceLoss, GradientsMatchFiniteDifferences) {
  Rng rng(307);
  Tensor logits = Tensor::parameter({3, 3}, rng.uniform_vec(9, -2.0, 2.0));
  std::vector<double> y(9), mk(9, 1.0);
  for (double& v : y) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  mk[4] = 0.0;
  Tensor labels = Tensor::constant({3, 3}, y);
  Tensor mask = Tensor::constant({3, 3}, mk);
  auto res = grad_check([&] { return masked_bce_loss(logits, labels, mask); }, {logits}, 1e-5,
                        1e-6);
  EXPECT_TRUE(res.ok) << res.worst;
}

// ---------------------------------------------------------------------------
// MSE / MAE

TEST(MseLoss, HandOracle) {
  Tensor pred = Tensor::constant({1, 2}, {1.0, 3.0});
  Tensor target = Tensor::constant({1, 2}, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(mse_loss(pred, target).item(), 5.0);
  EXPECT_DOUBLE_EQ(mae_metric({1.0, 3.0}, {0.0, 0.0}), 2.0);
}

TEST(MseLoss, PerfectPredictionIsZero) {
  Tensor pred = Tensor::constant({2, 2}, {0.5, -1.5, 2.0, 0.0});
  EXPECT_DOUBLE_EQ(mse_loss(pred, pred).item(), 0.0);
}

TEST(MseLoss, MaskedAndGradCheck) {
  Rng rng(311);
  Tensor pred = Tensor::parameter({2, 3}, rng.uniform_vec(6, -2.0, 2.0));
  Tensor target = Tensor::constant({2, 3}, rng.uniform_vec(6, -2.0, 2.0));
  Tensor mask = Tensor::constant({2, 3}, {1.0, 0.0, 1.0, 1.0, 1.0, 0.0});
  auto res =
      grad_check([&] { return masked_mse_loss(pred, target, mask); }, {pred}, 1e-5, 1e-6);
  EXPECT_TRUE(res.ok) << res.worst;
  EXPECT_THROW(masked_mse_loss(pred, target, Tensor::zeros({2, 3})), LossError);
}

TEST(MaeMetric, NeverExceedsRootMse) {
  Rng rng(313);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p = rng.uniform_vec(17, -5.0, 5.0);
    std::vector<double> t = rng.uniform_vec(17, -5.0, 5.0);
    double mse = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mse += (p[i] - t[i]) * (p[i] - t[i]);
    mse /= static_cast<double>(p.size());
    EXPECT_LE(mae_metric(p, t), std::sqrt(mse) + 1e-12);
  }
}

TEST(MaeMetric, AllMaskedThrows) {
  std::vector<double> mask{0.0, 0.0};
  EXPECT_THROW(mae_metric({1.0, 2.0}, {0.0, 0.0}, &mask), LossError);
}

// ---------------------------------------------------------------------------
// ROC-AUC

double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

TEST(RocAuc, PerfectAndInvertedRanking) {
  EXPECT_DOUBLE_EQ(roc_auc({0.9, 0.1}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc({0.1, 0.9}, {1, 0}), 0.0);
}

TEST(RocAuc, AllTiesGiveHalf) {
  EXPECT_DOUBLE_EQ(roc_auc({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}), 0.5);
}

TEST(RocAuc, MatchesBruteForceWithTies) {
  Rng rng(317);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.range(5, 50);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& s : scores) s = std::floor(rng.uniform(-3.0, 3.0) * 4.0) / 4.0;  // force ties
    bool has_pos = false, has_neg = false;
    for (auto& y : labels) {
      y = rng.uniform() < 0.4 ? 1 : 0;
      (y ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;
    EXPECT_NEAR(roc_auc(scores, labels), brute_force_auc(scores, labels), 1e-12);
  }
}

TEST(RocAuc, ReflectionIdentityIsExact) {
  Rng rng(331);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.range(4, 40);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<double> neg(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    labels[0] = 1;
    labels[1] = 0;
    for (std::size_t i = 2; i < labels.size(); ++i) labels[i] = rng.uniform() < 0.5;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = std::floor(rng.uniform(-2.0, 2.0) * 8.0) / 8.0;
      neg[i] = -scores[i];
    }
    EXPECT_EQ(roc_auc(scores, labels) + roc_auc(neg, labels), 1.0);
  }
}

TEST(RocAuc, SingleClassThrows) {
  EXPECT_THROW(roc_auc({0.1, 0.2}, {1, 1}), AucError);
  EXPECT_THROW(roc_auc({0.1, 0.2}, {0, 0}), AucError);
  EXPECT_THROW(roc_auc({0.1, 0.2}, {0}), AucError);  // size mismatch
}

// ---------------------------------------------------------------------------
// Adam

TEST(Adam, ZeroGradientIsAFixedPoint) {
  Tensor p = Tensor::parameter({2}, {1.5, -0.5});
  Adam opt({p});
  opt.zero_grad();
  backward(sum_all(mul(p, Tensor::zeros({2}))));  // grad = 0
  opt.step();
  EXPECT_EQ(opt.step_count(), 1);
  EXPECT_DOUBLE_EQ(p.values()[0], 1.5);
  EXPECT_DOUBLE_EQ(p.values()[1], -0.5);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  Tensor p = Tensor::parameter({2}, {1.0, 1.0});
  Adam opt({p});
  opt.zero_grad();
  backward(sum_all(mul(p, Tensor::constant({2}, {3.0, -0.2}))));
  opt.step();
  EXPECT_NEAR(p.values()[0], 1.0 - 0.001, 1e-9);
  EXPECT_NEAR(p.values()[1], 1.0 + 0.001, 1e-9);
}

TEST(Adam, QuadraticBowlLossStrictlyDecreases) {
  Tensor x = Tensor::parameter({1}, {1.0});
  Adam opt({x});
  double prev = 1.0;
  for (int i = 0; i < 100; ++i) {
    opt.zero_grad();
    Tensor loss = sum_all(mul(x, x));
    backward(loss);
    opt.step();
    const double now = x.values()[0] * x.values()[0];
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Adam, NegatedGradientsNegateUpdates) {
  // Every Adam state update is built from sign-symmetric floating-point ops,
  // so mirrored gradients keep the two trajectories exact negations of each
  // other, bit for bit, step after step — provided both start at zero.
  Tensor a = Tensor::parameter({3}, {0.0, 0.0, 0.0});
  Tensor b = Tensor::parameter({3}, {0.0, 0.0, 0.0});
  Adam oa({a}), ob({b});
  Rng rng(337);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> g = rng.uniform_vec(3, -2.0, 2.0);
    std::vector<double> gn(3);
    for (std::size_t k = 0; k < 3; ++k) gn[k] = -g[k];
    oa.zero_grad();
    backward(sum_all(mul(a, Tensor::constant({3}, g))));
    oa.step();
    ob.zero_grad();
    backward(sum_all(mul(b, Tensor::constant({3}, gn))));
    ob.step();
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.values()[k], -b.values()[k]);
  }
}

TEST(Adam, NonFiniteGradientRejectedBeforeMutation) {
  Tensor p = Tensor::parameter({1}, {2.0});
  Adam opt({p});
  opt.zero_grad();
  backward(sum_all(mul(p, Tensor::constant({1}, {std::nan("")}))));
  EXPECT_THROW(opt.step(), NumericError);
  EXPECT_DOUBLE_EQ(p.values()[0], 2.0);
  EXPECT_EQ(opt.step_count(), 0);
}

// ---------------------------------------------------------------------------
// Loss reduction ratio

TEST(LossReduction, HandOracles) {
  EXPECT_DOUBLE_EQ(loss_reduction_ratio(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(loss_reduction_ratio(1.7, 1.7), 0.0);
  EXPECT_NEAR(loss_reduction_ratio(1.0, 1.2), -0.2, 1e-15);
  EXPECT_THROW(loss_reduction_ratio(0.0, 1.0), LossError);
}

TEST(LossReduction, SeedPairedMeans) {
  auto [rt, rs] = mean_loss_reduction({2.0, 4.0}, {1.0, 3.0}, {1.0, 2.0}, {1.2, 1.0});
  EXPECT_DOUBLE_EQ(rt, (0.5 + 0.25) / 2.0);
  EXPECT_DOUBLE_EQ(rs, (-0.2 + 0.5) / 2.0);
  EXPECT_THROW(mean_loss_reduction({1.0}, {1.0, 2.0}, {1.0}, {1.0}), LossError);
  EXPECT_THROW(mean_loss_reduction({}, {}, {}, {}), LossError);
}

// ---------------------------------------------------------------------------
// Gradient-check suite

TEST(GradSuite, EveryComponentPasses) {
  auto reports = run_gradcheck_suite(/*seed=*/5, 1e-4, /*graphs=*/4);
  ASSERT_EQ(reports.size(), 10u);
  std::vector<std::string> expected{"host.rsgcn", "host.ggnn", "host.rgat", "host.gin",
                                    "gwm.full",   "gwm.nogate", "gwm.simple", "readout",
                                    "loss.bce",   "loss.mse"};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    EXPECT_EQ(reports[i].component, expected[i]);
    EXPECT_TRUE(reports[i].ok) << reports[i].component << ": " << reports[i].worst;
    EXPECT_LT(reports[i].max_rel_err, 1e-4) << reports[i].component;
  }
}

TEST(GradSuite, SeedIndependencePasses) {
  for (std::uint64_t seed : {1ull, 2ull}) {
    auto reports = run_gradcheck_suite(seed, 1e-4, 3);
    for (const auto& r : reports) EXPECT_TRUE(r.ok) << r.component << " seed " << seed;
  }
}

TEST(GradSuite, InjectedBackwardFaultIsCaughtAndNamed) {
  inject_backward_fault(OpKind::Tanh);
  auto reports = run_gradcheck_suite(5, 1e-4, 3);
  clear_backward_fault();
  bool any_failed = false;
  for (const auto& r : reports) {
    if (r.component == "host.rsgcn" || r.component == "loss.bce" || r.component == "loss.mse") {
      EXPECT_TRUE(r.ok) << r.component << " uses no tanh";  // unaffected paths stay green
    }
    if (!r.ok) any_failed = true;
  }
  EXPECT_TRUE(any_failed);
  // and the suite recovers once the fault is cleared
  auto clean = run_gradcheck_suite(5, 1e-4, 3);
  for (const auto& r : clean) EXPECT_TRUE(r.ok) << r.component;
}

TEST(GradSuite, OpNameLookup) {
  EXPECT_EQ(op_kind_from_name("tanh"), OpKind::Tanh);
  EXPECT_EQ(op_kind_from_name("matmul"), OpKind::MatMul);
  EXPECT_EQ(op_kind_from_name("bce"), OpKind::BceLoss);
  EXPECT_FALSE(op_kind_from_name("conv").has_value());
}

// ---------------------------------------------------------------------------
// Training loop

std::vector<LabeledMol> synth_to_items(const std::vector<SynthItem>& synth, bool classification,
                                       double const_label = -1.0) {
  std::vector<LabeledMol> items;
  for (const SynthItem& s : synth) {
    LabeledMol lm;
    lm.smiles = s.smiles;
    lm.mol = parse_smiles(s.smiles);
    lm.labels = {const_label >= 0.0 ? const_label
                                    : (classification ? static_cast<double>(s.label)
                                                      : static_cast<double>(s.label))};
    lm.label_present = {true};
    items.push_back(std::move(lm));
  }
  return items;
}

AtomVocab vocab_of(const std::vector<LabeledMol>& items) {
  std::vector<MolGraph> mols;
  for (const auto& it : items) mols.push_back(it.mol);
  return build_vocab(mols.begin(), mols.end());
}

ModelConfig tiny_train_config(const AtomVocab& vocab, std::optional<GwmVariant> variant) {
  ModelConfig cfg;
  cfg.host = HostKind::Rsgcn;
  cfg.variant = variant;
  cfg.layers = 2;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.relations = kBondTypes;
  cfg.tasks = 1;
  cfg.node_feat_width = vocab.size();
  cfg.super_feat_width = supernode_feature_width(vocab);
  return cfg;
}

TEST(TrainLoop, IdenticalSeedsGiveIdenticalRecords) {
  SynthOptions sopt;
  sopt.count = 30;
  sopt.min_nodes = 6;
  sopt.max_nodes = 10;
  sopt.seed = 21;
  auto items = synth_to_items(make_longrange_items(sopt), true);
  AtomVocab vocab = vocab_of(items);
  std::vector<LabeledMol> train(items.begin(), items.begin() + 20);
  std::vector<LabeledMol> val(items.begin() + 20, items.begin() + 25);
  std::vector<LabeledMol> test(items.begin() + 25, items.end());

  TrainOptions topt;
  topt.epochs = 3;
  topt.batch_size = 8;
  topt.seed = 77;
  RunRecord r1, r2;
  {
    Model m = make_model(tiny_train_config(vocab, GwmVariant::Full), 77);
    r1 = train_loop(m, train, val, test, vocab, topt);
  }
  {
    Model m = make_model(tiny_train_config(vocab, GwmVariant::Full), 77);
    r2 = train_loop(m, train, val, test, vocab, topt);
  }
  EXPECT_TRUE(r1 == r2);
  ASSERT_EQ(r1.epochs.size(), 3u);
  EXPECT_EQ(r1.epochs.front().epoch, 1);  // epochs are 1-based
  EXPECT_GT(r1.best_epoch, 0);

  // serialized bytes identical too, wall time excluded
  const std::string p1 = std::string(::testing::TempDir()) + "/rec1.jsonl";
  const std::string p2 = std::string(::testing::TempDir()) + "/rec2.jsonl";
  write_run_record(p1, r1);
  write_run_record(p2, r2);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string b1 = slurp(p1), b2 = slurp(p2);
  EXPECT_EQ(b1, b2);
  EXPECT_EQ(b1.find("wall"), std::string::npos);
  EXPECT_NE(b1.find("\"summary\":true"), std::string::npos);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST(TrainLoop, DifferentSeedsDiffer) {
  SynthOptions sopt;
  sopt.count = 60;
  sopt.min_nodes = 6;
  sopt.max_nodes = 9;
  sopt.seed = 22;
  auto items = synth_to_items(make_longrange_items(sopt), true);
  AtomVocab vocab = vocab_of(items);
  // class-balanced splits so the validation AUC is always defined
  std::vector<LabeledMol> pos, neg;
  for (const auto& it : items) (it.labels[0] != 0.0 ? pos : neg).push_back(it);
  ASSERT_GE(pos.size(), 8u);
  ASSERT_GE(neg.size(), 8u);
  std::vector<LabeledMol> train(pos.begin(), pos.begin() + 6);
  train.insert(train.end(), neg.begin(), neg.begin() + 6);
  std::vector<LabeledMol> val(pos.begin() + 6, pos.begin() + 8);
  val.insert(val.end(), neg.begin() + 6, neg.begin() + 8);
  std::vector<LabeledMol> test = val;
  TrainOptions topt;
  topt.epochs = 2;
  topt.batch_size = 8;
  topt.seed = 1;
  Model m1 = make_model(tiny_train_config(vocab, std::nullopt), 1);
  RunRecord r1 = train_loop(m1, train, val, test, vocab, topt);
  topt.seed = 2;
  Model m2 = make_model(tiny_train_config(vocab, std::nullopt), 2);
  RunRecord r2 = train_loop(m2, train, val, test, vocab, topt);
  EXPECT_FALSE(r1 == r2);
}

TEST(TrainLoop, LearnsAConstantRegressionTarget) {
  SynthOptions sopt;
  sopt.count = 40;
  sopt.min_nodes = 5;
  sopt.max_nodes = 8;
  sopt.seed = 23;
  auto items = synth_to_items(make_longrange_items(sopt), false, /*const_label=*/0.7);
  AtomVocab vocab = vocab_of(items);
  std::vector<LabeledMol> train(items.begin(), items.begin() + 32);
  std::vector<LabeledMol> val(items.begin() + 32, items.begin() + 36);
  std::vector<LabeledMol> test(items.begin() + 36, items.end());
  TrainOptions topt;
  topt.epochs = 50;
  topt.batch_size = 8;
  topt.seed = 3;
  topt.classification = false;
  topt.learning_rate = 0.02;
  Model m = make_model(tiny_train_config(vocab, std::nullopt), 3);
  RunRecord rec = train_loop(m, train, val, test, vocab, topt);
  EXPECT_LT(rec.final_train_loss, 1e-3);
}

TEST(TrainLoop, BestEpochTracksValidationMetric) {
  SynthOptions sopt;
  sopt.count = 24;
  sopt.min_nodes = 5;
  sopt.max_nodes = 8;
  sopt.seed = 24;
  auto items = synth_to_items(make_longrange_items(sopt), true);
  AtomVocab vocab = vocab_of(items);
  std::vector<LabeledMol> train(items.begin(), items.begin() + 16);
  std::vector<LabeledMol> val(items.begin() + 16, items.begin() + 20);
  std::vector<LabeledMol> test(items.begin() + 20, items.end());
  TrainOptions topt;
  topt.epochs = 4;
  topt.batch_size = 8;
  topt.seed = 5;
  Model m = make_model(tiny_train_config(vocab, std::nullopt), 5);
  RunRecord rec = train_loop(m, train, val, test, vocab, topt);
  double best = -1.0;
  int best_epoch = 0;
  for (const EpochStats& e : rec.epochs)
    if (e.val_metric > best) {
      best = e.val_metric;
      best_epoch = e.epoch;
    }
  EXPECT_EQ(rec.best_epoch, best_epoch);
  EXPECT_DOUBLE_EQ(rec.best_val_metric, best);
  for (const EpochStats& e : rec.epochs) {
    if (e.epoch == rec.best_epoch) {
      EXPECT_DOUBLE_EQ(rec.train_loss_at_best, e.train_loss);
      EXPECT_DOUBLE_EQ(rec.test_loss_at_best, e.test_loss);
    }
  }
}

TEST(TrainLoop, EmptySplitThrows) {
  SynthOptions sopt;
  sopt.count = 6;
  sopt.seed = 25;
  auto items = synth_to_items(make_longrange_items(sopt), true);
  AtomVocab vocab = vocab_of(items);
  TrainOptions topt;
  Model m = make_model(tiny_train_config(vocab, std::nullopt), 1);
  EXPECT_THROW(train_loop(m, {}, items, items, vocab, topt), DataError);
  EXPECT_THROW(train_loop(m, items, {}, items, vocab, topt), DataError);
  EXPECT_THROW(train_loop(m, items, items, {}, vocab, topt), DataError);
}

TEST(TrainLoop, DivergenceAbortsWithNumericError) {
  SynthOptions sopt;
  sopt.count = 12;
  sopt.min_nodes = 5;
  sopt.max_nodes = 8;
  sopt.seed = 26;
  auto items = synth_to_items(make_longrange_items(sopt), false, 0.5);
  AtomVocab vocab = vocab_of(items);
  std::vector<LabeledMol> train(items.begin(), items.begin() + 8);
  std::vector<LabeledMol> val(items.begin() + 8, items.begin() + 10);
  std::vector<LabeledMol> test(items.begin() + 10, items.end());
  TrainOptions topt;
  topt.epochs = 60;
  topt.batch_size = 4;
  topt.seed = 6;
  topt.classification = false;
  topt.learning_rate = 1e40;  // first step flings weights so far that the
                              // squared error overflows to infinity
  Model m = make_model(tiny_train_config(vocab, std::nullopt), 6);
  EXPECT_THROW(train_loop(m, train, val, test, vocab, topt), NumericError);
}

TEST(EvalMetrics, AucThrowsWhenEveryTaskIsSingleClass) {
  SynthOptions sopt;
  sopt.count = 9;
  sopt.min_nodes = 5;
  sopt.max_nodes = 8;
  sopt.seed = 27;
  auto items = synth_to_items(make_longrange_items(sopt), true, /*const_label=*/1.0);
  AtomVocab vocab = vocab_of(items);
  Model m = make_model(tiny_train_config(vocab, std::nullopt), 7);
  EXPECT_THROW(eval_auc(m, items, vocab, 4), AucError);
}

}  // namespace
