// Training loop: seeded shuffled minibatches, Adam, per-epoch train loss /
// validation metric / test loss, best-validation snapshot selection, and the
// paired loss-reduction ratio used by the sweep experiment.
#pragma once

#include "gwm/adam.hpp"
#include "gwm/featurize.hpp"
#include "gwm/log.hpp"
#include "gwm/losses.hpp"
#include "gwm/model.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace gwm {

struct TrainOptions {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
  bool classification = true;  // BCE + ROC-AUC; otherwise MSE + MAE
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;  // mean per-task AUC (classify) or MAE (regress)
  double test_loss = 0.0;
};

struct RunRecord {
  std::string host, variant, task;
  int layers = 0, dim = 0, heads = 0, relations = 0, tasks = 0;
  std::uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_metric = 0.0;
  double train_loss_at_best = 0.0;
  double test_loss_at_best = 0.0;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double wall_seconds = 0.0;  // in-memory only; never serialized

  bool operator==(const RunRecord& o) const {
    if (host != o.host || variant != o.variant || task != o.task || layers != o.layers ||
        dim != o.dim || heads != o.heads || relations != o.relations || tasks != o.tasks ||
        seed != o.seed || best_epoch != o.best_epoch || best_val_metric != o.best_val_metric ||
        train_loss_at_best != o.train_loss_at_best ||
        test_loss_at_best != o.test_loss_at_best || final_train_loss != o.final_train_loss ||
        final_test_loss != o.final_test_loss || epochs.size() != o.epochs.size())
      return false;
    for (std::size_t i = 0; i < epochs.size(); ++i)
      if (epochs[i].epoch != o.epochs[i].epoch ||
          epochs[i].train_loss != o.epochs[i].train_loss ||
          epochs[i].val_metric != o.epochs[i].val_metric ||
          epochs[i].test_loss != o.epochs[i].test_loss)
        return false;
    return true;
  }
};

namespace detail_train {

inline double mask_total(const Tensor& mask) {
  double total = 0.0;
  for (double m : mask.values()) total += m;
  return total;
}

inline std::vector<LabeledMol> take_rows(const std::vector<LabeledMol>& items,
                                         const std::vector<int>& order, std::size_t start,
                                         std::size_t stop) {
  std::vector<LabeledMol> out;
  out.reserve(stop - start);
  for (std::size_t i = start; i < stop; ++i)
    out.push_back(items[static_cast<std::size_t>(order[i])]);
  return out;
}

}  // namespace detail_train

inline Tensor batch_loss(const Model& m, const GraphBatch& b, bool classification, bool training,
                         Rng* rng) {
  Tensor pred = model_forward(m, b, training, rng);
  return classification ? masked_bce_loss(pred, b.labels, b.label_mask)
                        : masked_mse_loss(pred, b.labels, b.label_mask);
}

// Mean loss over a fixed-order pass in eval mode, weighted by unmasked count
// so the result matches a whole-corpus mean regardless of batching.
inline double eval_loss(const Model& m, const std::vector<LabeledMol>& items,
                        const AtomVocab& vocab, int batch_size, bool classification) {
  double total = 0.0, count = 0.0;
  for (std::size_t start = 0; start < items.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(items.size(), start + static_cast<std::size_t>(batch_size));
    GraphBatch b = batch(std::vector<LabeledMol>(items.begin() + static_cast<std::ptrdiff_t>(start),
                                                 items.begin() + static_cast<std::ptrdiff_t>(stop)),
                         vocab, m.cfg.tasks);
    const double c = detail_train::mask_total(b.label_mask);
    if (c == 0.0) continue;
    total += batch_loss(m, b, classification, /*training=*/false, nullptr).item() * c;
    count += c;
  }
  if (count == 0.0) throw LossError("eval: every label in the split is masked out");
  return total / count;
}

// Mean per-task ROC-AUC over tasks with both classes present in the split.
inline double eval_auc(const Model& m, const std::vector<LabeledMol>& items,
                       const AtomVocab& vocab, int batch_size) {
  const int tasks = m.cfg.tasks;
  std::vector<std::vector<double>> scores(static_cast<std::size_t>(tasks));
  std::vector<std::vector<int>> labels(static_cast<std::size_t>(tasks));
  for (std::size_t start = 0; start < items.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(items.size(), start + static_cast<std::size_t>(batch_size));
    GraphBatch b = batch(std::vector<LabeledMol>(items.begin() + static_cast<std::ptrdiff_t>(start),
                                                 items.begin() + static_cast<std::ptrdiff_t>(stop)),
                         vocab, tasks);
    Tensor pred = model_forward(m, b, /*training=*/false);
    for (int g = 0; g < b.batch_size(); ++g)
      for (int t = 0; t < tasks; ++t) {
        if (b.label_mask.at({g, t}) == 0.0) continue;
        scores[static_cast<std::size_t>(t)].push_back(pred.at({g, t}));
        labels[static_cast<std::size_t>(t)].push_back(b.labels.at({g, t}) != 0.0 ? 1 : 0);
      }
  }
  double total = 0.0;
  int counted = 0;
  for (int t = 0; t < tasks; ++t) {
    const auto& y = labels[static_cast<std::size_t>(t)];
    const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
    const bool has_neg = std::find(y.begin(), y.end(), 0) != y.end();
    if (!has_pos || !has_neg) continue;  // AUC undefined for this task here
    total += roc_auc(scores[static_cast<std::size_t>(t)], y);
    ++counted;
  }
  if (counted == 0) throw AucError("eval: no task has both classes in this split");
  return total / counted;
}

inline double eval_mae(const Model& m, const std::vector<LabeledMol>& items,
                       const AtomVocab& vocab, int batch_size) {
  std::vector<double> pred, target;
  for (std::size_t start = 0; start < items.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(items.size(), start + static_cast<std::size_t>(batch_size));
    GraphBatch b = batch(std::vector<LabeledMol>(items.begin() + static_cast<std::ptrdiff_t>(start),
                                                 items.begin() + static_cast<std::ptrdiff_t>(stop)),
                         vocab, m.cfg.tasks);
    Tensor p = model_forward(m, b, /*training=*/false);
    for (int g = 0; g < b.batch_size(); ++g)
      for (int t = 0; t < m.cfg.tasks; ++t) {
        if (b.label_mask.at({g, t}) == 0.0) continue;
        pred.push_back(p.at({g, t}));
        target.push_back(b.labels.at({g, t}));
      }
  }
  return mae_metric(pred, target);
}

inline RunRecord train_loop(Model& m, const std::vector<LabeledMol>& train_items,
                            const std::vector<LabeledMol>& val_items,
                            const std::vector<LabeledMol>& test_items, const AtomVocab& vocab,
                            const TrainOptions& opt) {
  if (train_items.empty() || val_items.empty() || test_items.empty())
    throw DataError("train: every split must be nonempty");
  if (opt.epochs < 1 || opt.batch_size < 1)
    throw DataError("train: epochs and batch size must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.host = host_name(m.cfg.host);
  rec.variant = m.cfg.variant_str();
  rec.task = opt.classification ? "classify" : "regress";
  rec.layers = m.cfg.layers;
  rec.dim = m.cfg.dim;
  rec.heads = m.cfg.heads;
  rec.relations = m.cfg.relations;
  rec.tasks = m.cfg.tasks;
  rec.seed = opt.seed;

  Adam optimizer(m.params.tensors(), opt.learning_rate);
  Rng rng(opt.seed);
  std::vector<int> order(train_items.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0, count = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      GraphBatch b = batch(detail_train::take_rows(train_items, order, start, stop), vocab,
                           m.cfg.tasks);
      const double c = detail_train::mask_total(b.label_mask);
      if (c == 0.0) continue;
      optimizer.zero_grad();
      Tensor loss = batch_loss(m, b, opt.classification, /*training=*/true, &rng);
      if (!std::isfinite(loss.item()))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      backward(loss);
      optimizer.step();
      total += loss.item() * c;
      count += c;
    }
    if (count == 0.0) throw LossError("train: no labeled training examples");

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = total / count;
    st.val_metric = opt.classification ? eval_auc(m, val_items, vocab, opt.batch_size)
                                       : eval_mae(m, val_items, vocab, opt.batch_size);
    st.test_loss = eval_loss(m, test_items, vocab, opt.batch_size, opt.classification);
    rec.epochs.push_back(st);

    const bool better =
        rec.best_epoch == 0 || (opt.classification ? st.val_metric > rec.best_val_metric
                                                   : st.val_metric < rec.best_val_metric);
    if (better) {
      rec.best_epoch = epoch;
      rec.best_val_metric = st.val_metric;
      rec.train_loss_at_best = st.train_loss;
      rec.test_loss_at_best = st.test_loss;
    }
    log_info("epoch " + std::to_string(epoch) + ": train_loss " + std::to_string(st.train_loss) +
             ", val_metric " + std::to_string(st.val_metric) + ", test_loss " +
             std::to_string(st.test_loss));
  }
  rec.final_train_loss = rec.epochs.back().train_loss;
  rec.final_test_loss = rec.epochs.back().test_loss;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// Relative improvement of the enhanced run over its vanilla baseline:
// r = (L - L+) / |L|. Positive means the enhanced model did better.
inline double loss_reduction_ratio(double baseline, double enhanced) {
  if (baseline == 0.0)
    throw LossError("loss_reduction_ratio: baseline loss is zero, ratio undefined");
  return (baseline - enhanced) / std::abs(baseline);
}

// Seed-paired means over runs: element i of each list comes from the same
// seed. Returns (r_train_mean, r_test_mean).
inline std::pair<double, double> mean_loss_reduction(const std::vector<double>& base_train,
                                                     const std::vector<double>& plus_train,
                                                     const std::vector<double>& base_test,
                                                     const std::vector<double>& plus_test) {
  if (base_train.size() != plus_train.size() || base_test.size() != plus_test.size() ||
      base_train.size() != base_test.size() || base_train.empty())
    throw LossError("loss_reduction_ratio: runs are not paired");
  double r_train = 0.0, r_test = 0.0;
  for (std::size_t i = 0; i < base_train.size(); ++i) {
    r_train += loss_reduction_ratio(base_train[i], plus_train[i]);
    r_test += loss_reduction_ratio(base_test[i], plus_test[i]);
  }
  const double n = static_cast<double>(base_train.size());
  return {r_train / n, r_test / n};
}

// JSON-lines serialization: one object per epoch, then a summary object.
// Wall time is deliberately omitted so identical runs produce identical
// bytes.
inline void write_run_record(const std::string& path, const RunRecord& r) {
  std::ofstream out(path);
  if (!out) throw DataError("record: cannot write " + path);
  for (const EpochStats& e : r.epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["val_metric"] = e.val_metric;
    j["test_loss"] = e.test_loss;
    out << j.dump() << "\n";
  }
  nlohmann::json s;
  s["summary"] = true;
  s["host"] = r.host;
  s["variant"] = r.variant;
  s["task"] = r.task;
  s["layers"] = r.layers;
  s["dim"] = r.dim;
  s["heads"] = r.heads;
  s["relations"] = r.relations;
  s["tasks"] = r.tasks;
  s["seed"] = r.seed;
  s["epochs"] = static_cast<int>(r.epochs.size());
  s["best_epoch"] = r.best_epoch;
  s["best_val_metric"] = r.best_val_metric;
  s["train_loss_at_best"] = r.train_loss_at_best;
  s["test_loss_at_best"] = r.test_loss_at_best;
  s["final_train_loss"] = r.final_train_loss;
  s["final_test_loss"] = r.final_test_loss;
  out << s.dump() << "\n";
}

}  // namespace gwm
