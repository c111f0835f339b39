// Grid sweep over host x variant x depth x width x seed, with seed-paired
// loss-reduction ratios against the vanilla-host baseline. Produces
// losses.csv (one row per cell per epoch) and reduction.csv (mean paired
// ratios per host/variant).
#pragma once

#include "gwm/csv.hpp"
#include "gwm/dataset.hpp"
#include "gwm/log.hpp"
#include "gwm/train.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace gwm {

struct SweepOptions {
  std::string data_path;
  std::string dataset_name;  // defaults to the data file's stem
  std::vector<HostKind> hosts;
  std::vector<std::string> variants;  // "none", "full", "nogate", "simple"
  std::vector<int> layer_counts;
  std::vector<int> dims;
  std::vector<std::uint64_t> seeds;
  int heads = 8;
  int relations = kBondTypes;
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.001;
  bool classification = true;
  bool use_skeleton_split = true;  // otherwise structure-blind random split
  double train_frac = 0.8, val_frac = 0.1, test_frac = 0.1;
  std::uint64_t split_seed = 0;
  int jobs = 1;
  std::string out_dir = ".";
};

struct SweepCell {
  HostKind host = HostKind::Rsgcn;
  std::string variant;  // "none" = vanilla host
  int layers = 0;
  int dim = 0;
  std::uint64_t seed = 0;
};

struct CellResult {
  SweepCell cell;
  bool ok = false;
  std::string error;
  RunRecord record;
};

struct SweepSummary {
  std::vector<CellResult> cells;  // grid order, independent of --jobs
  int failures = 0;
  std::string losses_path, reduction_path;
};

namespace detail_sweep {

inline void validate(const SweepOptions& opt) {
  if (opt.hosts.empty() || opt.variants.empty() || opt.layer_counts.empty() ||
      opt.dims.empty() || opt.seeds.empty())
    throw DataError("sweep: empty grid (hosts, variants, layers, dims, seeds all required)");
  for (const std::string& v : opt.variants)
    if (v != "none" && !variant_from_name(v))
      throw DataError("sweep: unknown variant '" + v + "'");
  for (int l : opt.layer_counts)
    if (l < 1) throw DataError("sweep: layer count must be positive");
  for (int d : opt.dims)
    if (d < 1) throw DataError("sweep: dim must be positive");
  std::vector<std::uint64_t> s = opt.seeds;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    throw DataError("sweep: seeds must be distinct");
  if (opt.epochs < 1 || opt.batch_size < 1 || opt.jobs < 1)
    throw DataError("sweep: epochs, batch size, and jobs must be positive");
}

// Baseline runs are required for the paired ratios, so "none" always leads
// the variant list whether or not it was requested.
inline std::vector<std::string> variant_order(const std::vector<std::string>& requested) {
  std::vector<std::string> out{"none"};
  for (const std::string& v : requested)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

}  // namespace detail_sweep

inline std::vector<SweepCell> sweep_grid(const SweepOptions& opt) {
  detail_sweep::validate(opt);
  const std::vector<std::string> variants = detail_sweep::variant_order(opt.variants);
  std::vector<SweepCell> cells;
  for (HostKind host : opt.hosts)
    for (int layers : opt.layer_counts)
      for (int dim : opt.dims)
        for (const std::string& variant : variants)
          for (std::uint64_t seed : opt.seeds)
            cells.push_back({host, variant, layers, dim, seed});
  return cells;
}

inline SweepSummary run_sweep(const SweepOptions& opt) {
  const std::vector<SweepCell> cells = sweep_grid(opt);

  Dataset ds = load_dataset(opt.data_path);
  SplitIndices split =
      opt.use_skeleton_split
          ? ds.split(opt.train_frac, opt.val_frac, opt.test_frac, opt.split_seed)
          : random_split(ds.items.size(), opt.train_frac, opt.val_frac, opt.test_frac,
                         opt.split_seed);
  const std::vector<LabeledMol> train_items = ds.take(split.train);
  const std::vector<LabeledMol> val_items = ds.take(split.val);
  const std::vector<LabeledMol> test_items = ds.take(split.test);

  SweepSummary summary;
  summary.cells.resize(cells.size());

  auto run_cell = [&](const SweepCell& cell) {
    CellResult res;
    res.cell = cell;
    try {
      ModelConfig cfg;
      cfg.host = cell.host;
      cfg.variant = variant_from_name(cell.variant);
      cfg.layers = cell.layers;
      cfg.dim = cell.dim;
      cfg.heads = opt.heads;
      cfg.relations = opt.relations;
      cfg.tasks = ds.task_count();
      cfg.classification = opt.classification;
      cfg.node_feat_width = ds.vocab.size();
      cfg.super_feat_width = supernode_feature_width(ds.vocab);

      TrainOptions topt;
      topt.epochs = opt.epochs;
      topt.batch_size = opt.batch_size;
      topt.learning_rate = opt.learning_rate;
      topt.seed = cell.seed;
      topt.classification = opt.classification;

      Model m = make_model(cfg, cell.seed);
      res.record = train_loop(m, train_items, val_items, test_items, ds.vocab, topt);
      res.ok = true;
    } catch (const std::exception& e) {
      res.error = e.what();
    }
    return res;
  };

  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      log_info("sweep cell " + std::to_string(i + 1) + "/" + std::to_string(cells.size()) + ": " +
               host_name(cells[i].host) + "/" + cells[i].variant + " L=" +
               std::to_string(cells[i].layers) + " D=" + std::to_string(cells[i].dim) + " seed=" +
               std::to_string(cells[i].seed));
      summary.cells[i] = run_cell(cells[i]);
      if (!summary.cells[i].ok)
        log_error("sweep cell failed: " + summary.cells[i].error);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (const CellResult& r : summary.cells)
    if (!r.ok) ++summary.failures;

  std::filesystem::create_directories(opt.out_dir);
  const std::string dataset_name = opt.dataset_name.empty()
                                       ? std::filesystem::path(opt.data_path).stem().string()
                                       : opt.dataset_name;

  // losses.csv: every epoch of every completed cell, in grid order
  std::vector<std::vector<std::string>> loss_rows;
  for (const CellResult& r : summary.cells) {
    if (!r.ok) continue;
    for (const EpochStats& e : r.record.epochs)
      loss_rows.push_back({host_name(r.cell.host), r.cell.variant, std::to_string(r.cell.layers),
                           std::to_string(r.cell.dim), std::to_string(r.cell.seed),
                           std::to_string(e.epoch), format_double(e.train_loss),
                           format_double(e.val_metric), format_double(e.test_loss)});
  }
  summary.losses_path = (std::filesystem::path(opt.out_dir) / "losses.csv").string();
  write_csv(summary.losses_path,
            {"host", "variant", "L", "D", "seed", "epoch", "train_loss", "val_metric",
             "test_loss"},
            loss_rows);

  // reduction.csv: mean seed-paired final-loss reduction of each enhanced
  // variant against the vanilla run with the same host, depth, width, seed
  std::map<std::tuple<std::string, std::string, int, int, std::uint64_t>, const RunRecord*> done;
  for (const CellResult& r : summary.cells)
    if (r.ok)
      done[{host_name(r.cell.host), r.cell.variant, r.cell.layers, r.cell.dim, r.cell.seed}] =
          &r.record;

  std::vector<std::vector<std::string>> reduction_rows;
  const std::vector<std::string> variants = detail_sweep::variant_order(opt.variants);
  for (HostKind host : opt.hosts) {
    for (const std::string& variant : variants) {
      if (variant == "none") continue;
      std::vector<double> base_train, plus_train, base_test, plus_test;
      for (int layers : opt.layer_counts)
        for (int dim : opt.dims)
          for (std::uint64_t seed : opt.seeds) {
            auto base = done.find({host_name(host), "none", layers, dim, seed});
            auto plus = done.find({host_name(host), variant, layers, dim, seed});
            if (base == done.end() || plus == done.end()) continue;
            base_train.push_back(base->second->final_train_loss);
            plus_train.push_back(plus->second->final_train_loss);
            base_test.push_back(base->second->final_test_loss);
            plus_test.push_back(plus->second->final_test_loss);
          }
      if (base_train.empty()) continue;  // nothing completed to pair
      const auto [r_train, r_test] =
          mean_loss_reduction(base_train, plus_train, base_test, plus_test);
      reduction_rows.push_back({host_name(host), dataset_name, variant, format_double(r_train),
                                format_double(r_test)});
    }
  }
  summary.reduction_path = (std::filesystem::path(opt.out_dir) / "reduction.csv").string();
  write_csv(summary.reduction_path,
            {"host", "dataset", "variant", "r_train_mean", "r_test_mean"}, reduction_rows);
  return summary;
}

}  // namespace gwm
