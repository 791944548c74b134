// qfmri: command-line front end for the hybrid quantum-classical time-series
// classification pipeline. Progress goes to stderr; data goes to files and
// stdout so outputs stay pipeable. Exit codes: 0 ok, 1 data/runtime error,
// 2 usage error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfmri/data.hpp"
#include "qfmri/manifest.hpp"
#include "qfmri/model.hpp"
#include "qfmri/sbfc.hpp"
#include "qfmri/stats.hpp"
#include "qfmri/train.hpp"

namespace fs = std::filesystem;
using namespace qfmri;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = ".";
};

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto dash = tok.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int a = std::stoi(tok.substr(0, dash));
      const int b = std::stoi(tok.substr(dash + 1));
      for (int v = a; v <= b; ++v) out.push_back(v);
    } else {
      out.push_back(std::stoi(tok));
    }
  }
  return out;
}

std::vector<model::ModelKind> parse_spec_list(const std::string& csv) {
  std::vector<model::ModelKind> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "all") {
      return {model::ModelKind::baseline, model::ModelKind::hybrid1,
              model::ModelKind::hybrid2, model::ModelKind::hybrid4};
    }
    out.push_back(model::kind_from_name(tok));
  }
  return out;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int cmd_gen_data(const GlobalOpts& g, const std::string& config_path,
                 int n_healthy, int n_emci, double separation,
                 const std::string& affected, const std::string& out_file) {
  const auto t0 = std::chrono::steady_clock::now();
  data::SyntheticConfig cfg;
  if (!config_path.empty()) cfg = data::parse_synthetic_config(config_path);
  if (n_healthy > 0) cfg.n_healthy = n_healthy;
  if (n_emci > 0) cfg.n_emci = n_emci;
  if (separation >= 0.0) cfg.separation = separation;
  if (!affected.empty()) cfg.affected_rois = parse_int_list(affected);
  cfg.seed = g.seed;

  const std::string path =
      out_file.empty() ? out_path(g, "dataset.csv") : out_file;
  std::cerr << "generating " << cfg.n_healthy << "+" << cfg.n_emci
            << " subjects, separation " << cfg.separation << "\n";
  auto records = data::generate_synthetic(cfg);
  data::save_dataset(path, records);

  manifest::RunManifest m;
  m.command = "gen-data";
  m.seed = g.seed;
  m.config = {{"n_healthy", cfg.n_healthy},
              {"n_emci", cfg.n_emci},
              {"separation", cfg.separation},
              {"affected_rois", cfg.affected_rois}};
  m.artifacts = {path};
  m.wall_seconds = seconds_since(t0);
  m.write(path + ".manifest.json");
  std::cout << path << "\n";
  return 0;
}

int cmd_param_count(const std::string& spec_name) {
  if (spec_name == "all") {
    for (const auto kind :
         {model::ModelKind::baseline, model::ModelKind::hybrid1,
          model::ModelKind::hybrid2, model::ModelKind::hybrid4})
      std::cout << model::kind_name(kind) << " "
                << model::count_parameters(model::make_spec(kind)) << "\n";
    return 0;
  }
  const auto spec = model::make_spec(model::kind_from_name(spec_name));
  std::cout << model::count_parameters(spec) << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& dataset_path, int roi,
              const std::string& spec_name, int fold, int epochs, double lr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto records = data::load_dataset(dataset_path);
  auto samples = data::roi_slice(records, roi);
  std::vector<int> labels;
  for (const auto& s : samples) labels.push_back(s.label);

  const auto kind = model::kind_from_name(spec_name);
  train::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.seed = train::cell_seed(g.seed, roi, kind, fold);
  auto folds = data::stratified_kfold(labels, 5, train::fold_seed(g.seed, roi));
  if (fold < 0 || fold >= static_cast<int>(folds.size()))
    throw DataError("train: fold index out of range");

  std::cerr << "training " << spec_name << " on roi " << roi << ", fold "
            << fold << " (" << folds[fold].train.size() << " train / "
            << folds[fold].test.size() << " test)\n";
  auto outcome =
      train::train_one(model::make_spec(kind), cfg, samples, folds[fold]);

  const std::string ckpt = out_path(
      g, "model_" + spec_name + "_roi" + std::to_string(roi) + "_fold" +
             std::to_string(fold) + ".bin");
  model::save_checkpoint(ckpt, model::make_spec(kind), outcome.params);
  const std::string metrics = ckpt + ".metrics.csv";
  {
    std::ofstream mf(metrics);
    mf << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < outcome.loss_history.size(); ++e)
      mf << e << ',' << outcome.loss_history[e] << "\n";
  }

  manifest::RunManifest m;
  m.command = "train";
  m.seed = g.seed;
  m.config = {{"dataset", dataset_path}, {"roi", roi},   {"spec", spec_name},
              {"fold", fold},            {"epochs", epochs}, {"lr", lr}};
  m.artifacts = {ckpt, metrics};
  m.wall_seconds = seconds_since(t0);
  m.write(ckpt + ".manifest.json");

  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", outcome.test_balanced_accuracy);
  std::cout << buf << "\n";
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& dataset_path,
              const std::string& rois_csv, const std::string& specs_csv,
              int epochs, double lr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto records = data::load_dataset(dataset_path);
  const auto rois = parse_int_list(rois_csv);
  const auto kinds = parse_spec_list(specs_csv);

  train::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.seed = g.seed;

  const std::string results_csv = out_path(g, "sweep_results.csv");
  const std::string summary_csv = out_path(g, "sweep_summary.csv");
  std::cerr << "sweep: " << rois.size() << " rois x " << kinds.size()
            << " specs x 5 folds, " << g.workers << " workers\n";
  auto cells =
      train::run_sweep(records, rois, kinds, cfg, g.workers, 5, results_csv);

  long failed = 0;
  for (const auto& c : cells)
    if (c.failed) {
      ++failed;
      std::cerr << "cell failed (roi " << c.roi << ", "
                << model::kind_name(c.kind) << ", fold " << c.fold
                << "): " << c.error << "\n";
    }
  train::save_summary(summary_csv, train::summarize_sweep(cells));

  manifest::RunManifest m;
  m.command = "sweep";
  m.seed = g.seed;
  m.config = {{"dataset", dataset_path}, {"rois", rois_csv},
              {"specs", specs_csv},      {"epochs", epochs},
              {"lr", lr},                {"workers", g.workers}};
  m.artifacts = {results_csv, summary_csv};
  m.wall_seconds = seconds_since(t0);
  m.write(summary_csv + ".manifest.json");
  std::cout << summary_csv << "\n";
  return failed ? 1 : 0;
}

int cmd_rank(const GlobalOpts& g, const std::string& summary_path, int top_k) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rows = train::load_summary(summary_path);
  auto ranked = train::normalized_differences(rows);

  const std::string out_file = out_path(g, "ranking.csv");
  std::ofstream out(out_file);
  out << "rank,roi,nd_hybrid1,nd_hybrid2,nd_hybrid4,average\n";
  char buf[32];
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out << (i + 1) << ',' << ranked[i].roi;
    for (double v : ranked[i].norm_diff) {
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      out << ',' << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.6f", ranked[i].average);
    out << ',' << buf << "\n";
  }
  out.close();

  for (int i = 0; i < top_k && i < static_cast<int>(ranked.size()); ++i) {
    std::snprintf(buf, sizeof(buf), "%.3f", ranked[i].average);
    std::cout << (i + 1) << "," << ranked[i].roi << "," << buf << "\n";
  }

  manifest::RunManifest m;
  m.command = "rank";
  m.seed = g.seed;
  m.config = {{"summary", summary_path}, {"top", top_k}};
  m.artifacts = {out_file};
  m.wall_seconds = seconds_since(t0);
  m.write(out_file + ".manifest.json");
  return 0;
}

int cmd_ttest(const GlobalOpts& g, const std::string& summary_path) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rows = train::load_summary(summary_path);
  const char* names[4] = {"baseline", "hybrid1", "hybrid2", "hybrid4"};
  std::array<std::vector<double>, 4> cols;
  for (const auto& r : rows)
    for (int j = 0; j < 4; ++j) cols[j].push_back(r.ba[j]);

  const std::string out_file = out_path(g, "ttests.csv");
  std::ofstream out(out_file);
  out << "model_a,model_b,t,df,p_one_tail,p_two_tail,pearson_r\n";
  std::cout << "model_a,model_b,t,df,p_two_tail,pearson_r\n";
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const auto r = stats::paired_ttest(cols[a], cols[b]);
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%s,%.9f,%g,%.6e,%.6e,%.9f",
                    names[a], names[b], r.t, r.df, r.p_one_tail, r.p_two_tail,
                    r.pearson_r);
      out << line << "\n";
      std::snprintf(line, sizeof(line), "%s,%s,%.6f,%g,%.3e,%.6f", names[a],
                    names[b], r.t, r.df, r.p_two_tail, r.pearson_r);
      std::cout << line << "\n";
    }
  }
  out.close();

  manifest::RunManifest m;
  m.command = "ttest";
  m.seed = g.seed;
  m.config = {{"summary", summary_path}};
  m.artifacts = {out_file};
  m.wall_seconds = seconds_since(t0);
  m.write(out_file + ".manifest.json");
  return 0;
}

int cmd_sbfc(const GlobalOpts& g, const std::string& dataset_path,
             const std::string& seeds_csv, const std::string& lobe_map_path) {
  const auto t0 = std::chrono::steady_clock::now();
  auto records = data::load_dataset(dataset_path);
  const auto seeds = parse_int_list(seeds_csv);
  const auto lobe_map = sbfc::load_lobe_map(lobe_map_path);

  std::vector<sbfc::GroupDiffResult> diffs;
  const std::string sig_file = out_path(g, "sbfc_significance.csv");
  std::ofstream sig(sig_file);
  sig << "seed,target,t,p,significant\n";
  for (int seed : seeds) {
    std::cerr << "sbfc seed " << seed << "\n";
    auto d = sbfc::group_difference(records, seed);
    for (int roi = 1; roi <= data::kNumRois; ++roi) {
      if (roi == seed) continue;
      const bool is_sig =
          std::find(d.significant.begin(), d.significant.end(), roi) !=
          d.significant.end();
      char line[128];
      std::snprintf(line, sizeof(line), "%d,%d,%.6f,%.6e,%d", seed, roi,
                    d.t[roi - 1], d.p[roi - 1], is_sig ? 1 : 0);
      sig << line << "\n";
    }
    diffs.push_back(std::move(d));
  }
  sig.close();

  const auto summary = sbfc::summarize_lobes(diffs, lobe_map);
  const std::string edge_file = out_path(g, "sbfc_lobe_edges.csv");
  std::ofstream edges(edge_file);
  edges << "seed_lobe,target_lobe,count\n";
  for (const auto& e : summary.edges)
    edges << e.seed_lobe << ',' << e.target_lobe << ',' << e.count << "\n";
  edges.close();
  std::cout << "significant_edges," << summary.total << "\n";

  manifest::RunManifest m;
  m.command = "sbfc";
  m.seed = g.seed;
  m.config = {{"dataset", dataset_path},
              {"seeds", seeds_csv},
              {"lobe_map", lobe_map_path}};
  m.artifacts = {sig_file, edge_file};
  m.wall_seconds = seconds_since(t0);
  m.write(edge_file + ".manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid quantum-classical ROI time-series pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global RNG seed");
  app.add_option("--workers", g.workers, "sweep worker threads");
  app.add_option("--out-dir", g.out_dir, "output directory");

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_config, gen_affected, gen_out;
  int gen_h = -1, gen_e = -1;
  double gen_sep = -1.0;
  gen->add_option("--config", gen_config, "key=value config file");
  gen->add_option("--n-healthy", gen_h, "healthy subject count");
  gen->add_option("--n-emci", gen_e, "EMCI subject count");
  gen->add_option("--separation", gen_sep, "class separation in [0,1]");
  gen->add_option("--affected-rois", gen_affected,
                  "comma list/ranges of ROIs carrying the class signal");
  gen->add_option("--out", gen_out, "output CSV path");

  auto* pc = app.add_subcommand("param-count", "print trainable parameter count");
  std::string pc_spec;
  pc->add_option("spec", pc_spec, "baseline|hybrid1|hybrid2|hybrid4|all")
      ->required();

  auto* tr = app.add_subcommand("train", "train a single (roi, spec, fold) cell");
  std::string tr_dataset, tr_spec = "baseline";
  int tr_roi = 1, tr_fold = 0, tr_epochs = 100;
  double tr_lr = 1e-4;
  tr->add_option("--dataset", tr_dataset, "dataset CSV")->required();
  tr->add_option("--roi", tr_roi, "ROI index 1..116");
  tr->add_option("--spec", tr_spec, "model kind");
  tr->add_option("--fold", tr_fold, "fold index 0..4");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--lr", tr_lr, "learning rate");

  auto* sw = app.add_subcommand("sweep", "ROI x spec x fold sweep (resumable)");
  std::string sw_dataset, sw_rois = "1", sw_specs = "all";
  int sw_epochs = 100;
  double sw_lr = 1e-4;
  sw->add_option("--dataset", sw_dataset, "dataset CSV")->required();
  sw->add_option("--rois", sw_rois, "comma list/ranges, e.g. 1,5,10-12");
  sw->add_option("--specs", sw_specs, "comma list or 'all'");
  sw->add_option("--epochs", sw_epochs, "training epochs");
  sw->add_option("--lr", sw_lr, "learning rate");

  auto* rk = app.add_subcommand("rank", "normalized differences + top-k ROIs");
  std::string rk_summary;
  int rk_top = 9;
  rk->add_option("--summary", rk_summary, "summary CSV")->required();
  rk->add_option("--top", rk_top, "rows to print");

  auto* tt = app.add_subcommand("ttest", "paired t-tests over all model pairs");
  std::string tt_summary;
  tt->add_option("--summary", tt_summary, "summary CSV")->required();

  auto* sb = app.add_subcommand("sbfc", "seed-based connectivity analysis");
  std::string sb_dataset, sb_seeds = "1,84,18,17,39,38,23,92,110", sb_lobes;
  sb->add_option("--dataset", sb_dataset, "dataset CSV")->required();
  sb->add_option("--seeds", sb_seeds, "seed ROIs (comma list)");
  sb->add_option("--lobe-map", sb_lobes, "roi,lobe CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen_data(g, gen_config, gen_h, gen_e, gen_sep, gen_affected,
                          gen_out);
    if (pc->parsed()) return cmd_param_count(pc_spec);
    if (tr->parsed())
      return cmd_train(g, tr_dataset, tr_roi, tr_spec, tr_fold, tr_epochs,
                       tr_lr);
    if (sw->parsed())
      return cmd_sweep(g, sw_dataset, sw_rois, sw_specs, sw_epochs, sw_lr);
    if (rk->parsed()) return cmd_rank(g, rk_summary, rk_top);
    if (tt->parsed()) return cmd_ttest(g, tt_summary);
    if (sb->parsed()) return cmd_sbfc(g, sb_dataset, sb_seeds, sb_lobes);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
