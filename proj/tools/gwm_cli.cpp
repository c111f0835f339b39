// Command-line front end: single training runs, the gradient-check suite,
// grid sweeps with paired loss-reduction ratios, and the synthetic
// long-range dataset generator.
//
// Exit codes: 0 success, 1 data/runtime failure, 2 usage error.
#include "gwm/gradcheck_suite.hpp"
#include "gwm/sweep.hpp"
#include "gwm/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string data;
  std::string out = ".";
  std::string task = "classify";
  std::string split = "skeleton";
  int heads = 8;
  int relations = 4;
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.001;
  double train_frac = 0.8, val_frac = 0.1, test_frac = 0.1;
  std::uint64_t split_seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--data", a.data, "Dataset CSV with a 'smiles' column and one column per task")
      ->required();
  cmd->add_option("--out", a.out, "Output directory")->capture_default_str();
  cmd->add_option("--task", a.task, "Objective: classify (BCE/AUC) or regress (MSE/MAE)")->capture_default_str()
      ->check(CLI::IsMember({"classify", "regress"}));
  cmd->add_option("--split", a.split, "Split strategy")->capture_default_str()
      ->check(CLI::IsMember({"skeleton", "random"}));
  cmd->add_option("--split-seed", a.split_seed, "Seed for the split shuffle")->capture_default_str();
  cmd->add_option("--train-frac", a.train_frac, "Training fraction")->capture_default_str();
  cmd->add_option("--val-frac", a.val_frac, "Validation fraction")->capture_default_str();
  cmd->add_option("--test-frac", a.test_frac, "Test fraction")->capture_default_str();
  cmd->add_option("--heads", a.heads, "Attention heads (transmitter and RGAT)")->capture_default_str();
  cmd->add_option("--relations", a.relations, "Bond relation count")->capture_default_str();
  cmd->add_option("--epochs", a.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", a.batch_size, "Minibatch size")->capture_default_str();
  cmd->add_option("--lr", a.learning_rate, "Adam learning rate")->capture_default_str();
}

int run_train(const CommonArgs& a, const std::string& host, const std::string& variant,
              int layers, int dim, std::uint64_t seed) {
  gwm::Dataset ds = gwm::load_dataset(a.data);
  gwm::SplitIndices split =
      a.split == "skeleton"
          ? ds.split(a.train_frac, a.val_frac, a.test_frac, a.split_seed)
          : gwm::random_split(ds.items.size(), a.train_frac, a.val_frac, a.test_frac,
                              a.split_seed);

  gwm::ModelConfig cfg;
  cfg.host = *gwm::host_from_name(host);
  cfg.variant = gwm::variant_from_name(variant);
  cfg.layers = layers;
  cfg.dim = dim;
  cfg.heads = a.heads;
  cfg.relations = a.relations;
  cfg.tasks = ds.task_count();
  cfg.classification = a.task == "classify";
  cfg.node_feat_width = ds.vocab.size();
  cfg.super_feat_width = gwm::supernode_feature_width(ds.vocab);

  gwm::TrainOptions topt;
  topt.epochs = a.epochs;
  topt.batch_size = a.batch_size;
  topt.learning_rate = a.learning_rate;
  topt.seed = seed;
  topt.classification = cfg.classification;

  gwm::Model m = gwm::make_model(cfg, seed);
  gwm::RunRecord rec = gwm::train_loop(m, ds.take(split.train), ds.take(split.val),
                                       ds.take(split.test), ds.vocab, topt);

  std::filesystem::create_directories(a.out);
  const std::string record_path = (std::filesystem::path(a.out) / "record.jsonl").string();
  const std::string ckpt_path = (std::filesystem::path(a.out) / "model.ckpt").string();
  gwm::write_run_record(record_path, rec);
  gwm::save_checkpoint(ckpt_path, m.params);

  std::printf("%s/%s L=%d D=%d seed=%llu: best epoch %d, val %s %.6f, test loss %.6f\n",
              host.c_str(), rec.variant.c_str(), layers, dim,
              static_cast<unsigned long long>(seed), rec.best_epoch,
              cfg.classification ? "AUC" : "MAE", rec.best_val_metric, rec.test_loss_at_best);
  std::printf("wrote %s and %s\n", record_path.c_str(), ckpt_path.c_str());
  return kExitOk;
}

int run_gradcheck(std::uint64_t seed, int graphs, double tolerance,
                  const std::string& fault_op) {
  if (!fault_op.empty()) {
    const auto kind = gwm::op_kind_from_name(fault_op);
    if (!kind) {
      std::fprintf(stderr, "gradcheck: unknown op '%s' for --inject-fault\n", fault_op.c_str());
      return kExitUsage;
    }
    gwm::inject_backward_fault(*kind);
  }
  auto reports = gwm::run_gradcheck_suite(seed, tolerance, graphs);
  gwm::clear_backward_fault();

  std::vector<std::string> failed;
  for (const auto& r : reports) {
    std::printf("%-12s max_rel_err %.3e  %s\n", r.component.c_str(), r.max_rel_err,
                r.ok ? "ok" : "FAIL");
    if (!r.ok) {
      std::printf("             worst: %s\n", r.worst.c_str());
      failed.push_back(r.component);
    }
  }
  if (failed.empty()) {
    std::printf("all %zu components within %.1e\n", reports.size(), tolerance);
    return kExitOk;
  }
  std::string names;
  for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
  std::printf("gradient check FAILED: %s\n", names.c_str());
  return kExitRuntime;
}

int run_sweep(const CommonArgs& a, const std::vector<std::string>& hosts,
              const std::vector<std::string>& variants, const std::vector<int>& layer_counts,
              const std::vector<int>& dims, const std::vector<std::uint64_t>& seeds, int jobs) {
  gwm::SweepOptions opt;
  opt.data_path = a.data;
  for (const std::string& h : hosts) opt.hosts.push_back(*gwm::host_from_name(h));
  opt.variants = variants;
  opt.layer_counts = layer_counts;
  opt.dims = dims;
  opt.seeds = seeds;
  opt.heads = a.heads;
  opt.relations = a.relations;
  opt.epochs = a.epochs;
  opt.batch_size = a.batch_size;
  opt.learning_rate = a.learning_rate;
  opt.classification = a.task == "classify";
  opt.use_skeleton_split = a.split == "skeleton";
  opt.train_frac = a.train_frac;
  opt.val_frac = a.val_frac;
  opt.test_frac = a.test_frac;
  opt.split_seed = a.split_seed;
  opt.jobs = jobs;
  opt.out_dir = a.out;

  gwm::SweepSummary summary = gwm::run_sweep(opt);
  const int total = static_cast<int>(summary.cells.size());
  std::printf("sweep: %d/%d cells completed\n", total - summary.failures, total);
  for (const auto& c : summary.cells)
    if (!c.ok)
      std::printf("  failed: %s/%s L=%d D=%d seed=%llu: %s\n", gwm::host_name(c.cell.host),
                  c.cell.variant.c_str(), c.cell.layers, c.cell.dim,
                  static_cast<unsigned long long>(c.cell.seed), c.error.c_str());
  std::printf("wrote %s and %s\n", summary.losses_path.c_str(), summary.reduction_path.c_str());
  return summary.failures == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supernode-augmented graph neural networks for molecular property prediction"};
  app.require_subcommand(1);
  // One config file for the whole tool, with one INI section per subcommand
  // ([train], [sweep], ...). Command-line flags beat file values, file values
  // beat built-in defaults.
  app.set_config("--config", "",
                 "Read option defaults from an INI file with per-subcommand sections");

  CommonArgs train_args;
  std::string train_host = "rsgcn", train_variant = "full";
  int train_layers = 3, train_dim = 50;
  std::uint64_t train_seed = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one model and save its run record");
  train_cmd->fallthrough();  // lets --config (a root option) follow the subcommand
  add_common(train_cmd, train_args);
  train_cmd->add_option("--host", train_host, "Host message-passing layer")->capture_default_str()
      ->check(CLI::IsMember({"rsgcn", "ggnn", "rgat", "gin"}));
  train_cmd->add_option("--variant", train_variant, "Supernode module variant")->capture_default_str()
      ->check(CLI::IsMember({"none", "full", "nogate", "simple"}));
  train_cmd->add_option("--layers", train_layers, "Message-passing layers")->capture_default_str();
  train_cmd->add_option("--dim", train_dim, "Hidden width")->capture_default_str();
  train_cmd->add_option("--seed", train_seed, "Run seed (init, shuffling, dropout)")->capture_default_str();

  std::uint64_t gc_seed = 0;
  int gc_graphs = 10;
  double gc_tol = 1e-4;
  std::string gc_fault;
  CLI::App* gc_cmd = app.add_subcommand(
      "gradcheck", "Compare analytic gradients against central differences, per component");
  gc_cmd->fallthrough();  // lets --config (a root option) follow the subcommand
  gc_cmd->add_option("--seed", gc_seed, "Seed for the random probe graphs")->capture_default_str();
  gc_cmd->add_option("--graphs", gc_graphs, "Number of probe graphs")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc_tol, "Relative-error threshold")->capture_default_str();
  gc_cmd->add_option("--inject-fault", gc_fault,
                     "Scale the named op's backward pass by 1.05 (self-test)")
      ->group("");  // hidden: exists so the failure path itself can be tested

  CommonArgs sweep_args;
  std::vector<std::string> sweep_hosts{"rsgcn"};
  std::vector<std::string> sweep_variants{"full"};
  std::vector<int> sweep_layers{3};
  std::vector<int> sweep_dims{50};
  std::vector<std::uint64_t> sweep_seeds{0};
  int sweep_jobs = 1;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Train a host/variant/depth/width/seed grid and tabulate paired loss reductions");
  sweep_cmd->fallthrough();  // lets --config (a root option) follow the subcommand
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--host", sweep_hosts, "Host layers (comma-separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"rsgcn", "ggnn", "rgat", "gin"}));
  sweep_cmd->add_option("--variant", sweep_variants, "Variants; vanilla baselines always run")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "full", "nogate", "simple"}));
  sweep_cmd->add_option("--layers", sweep_layers, "Layer counts")->delimiter(',');
  sweep_cmd->add_option("--dim", sweep_dims, "Hidden widths")->delimiter(',');
  sweep_cmd->add_option("--seed", sweep_seeds, "Run seeds (paired across variants)")
      ->delimiter(',');
  sweep_cmd->add_option("--jobs", sweep_jobs, "Parallel training workers")->capture_default_str();

  std::string synth_out;
  gwm::SynthOptions synth_opt;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate the synthetic long-range dataset (trees and cycles, parity of diameter)");
  synth_cmd->fallthrough();  // lets --config (a root option) follow the subcommand
  synth_cmd->add_option("--out", synth_out, "Output CSV path")->required();
  synth_cmd->add_option("--count", synth_opt.count, "Number of molecules")->capture_default_str();
  synth_cmd->add_option("--min-nodes", synth_opt.min_nodes, "Minimum atoms")->capture_default_str();
  synth_cmd->add_option("--max-nodes", synth_opt.max_nodes, "Maximum atoms")->capture_default_str();
  synth_cmd->add_option("--cycle-fraction", synth_opt.cycle_fraction,
                        "Fraction of cycles (rest are random trees)")->capture_default_str();
  synth_cmd->add_option("--seed", synth_opt.seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed())
      return run_train(train_args, train_host, train_variant, train_layers, train_dim,
                       train_seed);
    if (gc_cmd->parsed()) return run_gradcheck(gc_seed, gc_graphs, gc_tol, gc_fault);
    if (sweep_cmd->parsed())
      return run_sweep(sweep_args, sweep_hosts, sweep_variants, sweep_layers, sweep_dims,
                       sweep_seeds, sweep_jobs);
    if (synth_cmd->parsed()) {
      gwm::write_longrange_csv(synth_out, synth_opt);
      std::printf("wrote %d molecules to %s\n", synth_opt.count, synth_out.c_str());
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
