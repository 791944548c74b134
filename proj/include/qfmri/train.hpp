#pragma once

// Training loop, balanced accuracy, the ROI x model sweep, and the
// normalized-difference ranking. Sweep cells are seeded independently
// (per-cell seed = mix of global seed, roi, spec kind, fold) so any cell can
// be rerun in isolation and worker count never changes results.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qfmri/data.hpp"
#include "qfmri/errors.hpp"
#include "qfmri/model.hpp"
#include "qfmri/nn.hpp"

namespace qfmri::train {

struct TrainConfig {
  double lr = 1e-4;
  int batch = 1;
  int epochs = 100;
  std::uint64_t seed = 1;
  bool use_class_weights = true;
};

inline double balanced_accuracy(long tp, long fn, long tn, long fp) {
  if (tp + fn <= 0 || tn + fp <= 0)
    throw MetricError("balanced_accuracy: empty class");
  return 0.5 * (static_cast<double>(tp) / (tp + fn) +
                static_cast<double>(tn) / (tn + fp));
}

struct TrainOutcome {
  model::ModelParams params;
  double test_balanced_accuracy;
  std::vector<double> loss_history;  // mean loss per epoch
};

inline TrainOutcome train_one(const model::ModelSpec& spec,
                              const TrainConfig& config,
                              const std::vector<data::Sample>& samples,
                              const data::FoldSplit& fold) {
  std::vector<int> train_labels;
  for (std::size_t i : fold.train) train_labels.push_back(samples[i].label);
  std::array<double, 2> weights = {1.0, 1.0};
  if (config.use_class_weights) weights = data::class_weights(train_labels);

  std::mt19937_64 rng(config.seed);
  model::ModelParams params = model::init_params(spec, rng());
  nn::AdamState adam(params.values.size(), config.lr);

  TrainOutcome out;
  std::vector<std::size_t> order = fold.train;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const auto& s = samples[idx];
      auto [logits, trace] = model::forward(spec, params, s.series, true, rng);
      auto xent = nn::weighted_softmax_xent(logits, s.label, weights);
      if (!std::isfinite(xent.loss))
        throw NumericsError("train_one: non-finite loss");
      epoch_loss += xent.loss;
      auto grads = model::backward(spec, params, trace, xent.dlogits);
      nn::adam_step(params.values, grads, adam);
    }
    out.loss_history.push_back(order.empty() ? 0.0
                                             : epoch_loss / order.size());
  }

  long tp = 0, fn = 0, tn = 0, fp = 0;
  std::mt19937_64 eval_rng(0);  // unused: dropout is identity in eval mode
  for (std::size_t idx : fold.test) {
    const auto& s = samples[idx];
    auto [logits, trace] =
        model::forward(spec, params, s.series, false, eval_rng);
    const int pred = logits[1] > logits[0] ? 1 : 0;
    if (s.label == 1)
      (pred == 1 ? tp : fn) += 1;
    else
      (pred == 0 ? tn : fp) += 1;
  }
  out.test_balanced_accuracy = balanced_accuracy(tp, fn, tn, fp);
  out.params = std::move(params);
  return out;
}

// --- sweep ------------------------------------------------------------------

struct SweepCellResult {
  int roi;
  model::ModelKind kind;
  int fold;
  double balanced_accuracy;
  bool failed = false;
  std::string error;
};

inline std::uint64_t cell_seed(std::uint64_t global_seed, int roi,
                               model::ModelKind kind, int fold) {
  std::uint64_t h = data::mix_seed(global_seed, static_cast<std::uint64_t>(roi));
  h = data::mix_seed(h, static_cast<std::uint64_t>(kind) + 101);
  return data::mix_seed(h, static_cast<std::uint64_t>(fold) + 7);
}

inline std::uint64_t fold_seed(std::uint64_t global_seed, int roi) {
  return data::mix_seed(global_seed ^ 0xf01d5eedULL,
                        static_cast<std::uint64_t>(roi));
}

// Runs every (roi, spec, fold) cell. Already-present results (read from
// `results_csv` if it exists) are kept, making interrupted sweeps resumable.
// Cell errors are recorded, not fatal.
inline std::vector<SweepCellResult> run_sweep(
    const std::vector<data::SubjectRecord>& records,
    const std::vector<int>& rois, const std::vector<model::ModelKind>& kinds,
    const TrainConfig& config, int workers, int k_folds = 5,
    const std::string& results_csv = "") {
  struct Cell {
    int roi;
    model::ModelKind kind;
    int fold;
  };
  std::vector<Cell> cells;
  for (int roi : rois)
    for (auto kind : kinds)
      for (int f = 0; f < k_folds; ++f) cells.push_back({roi, kind, f});

  std::map<std::string, double> done;
  auto cell_key = [](int roi, model::ModelKind kind, int fold) {
    return std::to_string(roi) + "," + model::kind_name(kind) + "," +
           std::to_string(fold);
  };
  if (!results_csv.empty()) {
    std::ifstream in(results_csv);
    std::string line;
    if (in && std::getline(in, line)) {  // header
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string roi_s, kind_s, fold_s, ba_s;
        if (std::getline(ss, roi_s, ',') && std::getline(ss, kind_s, ',') &&
            std::getline(ss, fold_s, ',') && std::getline(ss, ba_s, ','))
          done[roi_s + "," + kind_s + "," + fold_s] = std::stod(ba_s);
      }
    }
  }

  std::vector<SweepCellResult> results(cells.size());
  std::mutex io_mutex;
  std::optional<std::ofstream> append;
  if (!results_csv.empty()) {
    const bool fresh = done.empty();
    append.emplace(results_csv, std::ios::app);
    if (fresh && *append)
      *append << "roi,spec,fold,balanced_accuracy\n" << std::flush;
  }

  std::atomic<std::size_t> next{0};
  auto worker_fn = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& c = cells[i];
      SweepCellResult& r = results[i];
      r.roi = c.roi;
      r.kind = c.kind;
      r.fold = c.fold;
      const auto key = cell_key(c.roi, c.kind, c.fold);
      if (auto it = done.find(key); it != done.end()) {
        r.balanced_accuracy = it->second;
        continue;
      }
      try {
        auto samples = data::roi_slice(records, c.roi);
        std::vector<int> labels;
        for (const auto& s : samples) labels.push_back(s.label);
        auto folds =
            data::stratified_kfold(labels, k_folds, fold_seed(config.seed, c.roi));
        TrainConfig cell_cfg = config;
        cell_cfg.seed = cell_seed(config.seed, c.roi, c.kind, c.fold);
        auto outcome = train_one(model::make_spec(c.kind), cell_cfg, samples,
                                 folds[c.fold]);
        r.balanced_accuracy = outcome.test_balanced_accuracy;
        if (append) {
          std::lock_guard<std::mutex> lock(io_mutex);
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", r.balanced_accuracy);
          *append << c.roi << ',' << model::kind_name(c.kind) << ','
                  << c.fold << ',' << buf << "\n"
                  << std::flush;
        }
      } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
      }
    }
  };

  workers = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers - 1; ++w) pool.emplace_back(worker_fn);
  worker_fn();
  for (auto& t : pool) t.join();
  return results;
}

// --- summary table and ranking ----------------------------------------------

// One row per ROI, mirroring the published summary layout: balanced accuracy
// for the baseline and the three hybrid conditions, optionally followed by
// the three normalized-difference columns.
struct SummaryRow {
  int roi;
  std::array<double, 4> ba;  // baseline, hybrid1, hybrid2, hybrid4
  std::optional<std::array<double, 3>> norm_diff;
};

inline std::vector<SummaryRow> summarize_sweep(
    const std::vector<SweepCellResult>& cells) {
  std::map<int, std::array<std::pair<double, int>, 4>> acc;
  auto kind_col = [](model::ModelKind k) {
    switch (k) {
      case model::ModelKind::baseline: return 0;
      case model::ModelKind::hybrid1: return 1;
      case model::ModelKind::hybrid2: return 2;
      case model::ModelKind::hybrid4: default: return 3;
    }
  };
  for (const auto& c : cells) {
    if (c.failed) continue;
    auto& slot = acc[c.roi][kind_col(c.kind)];
    slot.first += c.balanced_accuracy;
    slot.second += 1;
  }
  std::vector<SummaryRow> rows;
  for (const auto& [roi, cols] : acc) {
    SummaryRow r;
    r.roi = roi;
    for (int j = 0; j < 4; ++j)
      r.ba[j] = cols[j].second ? cols[j].first / cols[j].second
                               : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(r);
  }
  return rows;
}

inline void save_summary(const std::string& path,
                         const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("save_summary: cannot open " + path);
  out << "roi,ba_baseline,ba_hybrid1,ba_hybrid2,ba_hybrid4";
  const bool with_nd = !rows.empty() && rows.front().norm_diff.has_value();
  if (with_nd) out << ",nd_hybrid1,nd_hybrid2,nd_hybrid4";
  out << "\n";
  char buf[32];
  for (const auto& r : rows) {
    out << r.roi;
    for (double v : r.ba) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    if (with_nd)
      for (double v : *r.norm_diff) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
      }
    out << "\n";
  }
}

inline std::vector<SummaryRow> load_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_summary: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_summary: empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  const bool with_nd = header.size() >= 8;
  if (header.size() != 5 && header.size() != 8)
    throw ParseError("load_summary: expected 5 or 8 columns, got " +
                     std::to_string(header.size()));
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> vals;
    std::string f;
    std::string roi_s;
    std::getline(ss, roi_s, ',');
    while (std::getline(ss, f, ',')) vals.push_back(std::stod(f));
    if (vals.size() + 1 != header.size())
      throw ParseError("load_summary: malformed line " +
                       std::to_string(line_no));
    SummaryRow r;
    r.roi = std::stoi(roi_s);
    for (int j = 0; j < 4; ++j) r.ba[j] = vals[j];
    if (with_nd) r.norm_diff = std::array<double, 3>{vals[4], vals[5], vals[6]};
    rows.push_back(r);
  }
  return rows;
}

struct RankedRoi {
  int roi;
  std::array<double, 3> norm_diff;
  double average;
};

// Per hybrid condition h: d_h(roi) = BA_h - BA_baseline, min-max normalized
// across ROIs; the three normalized columns are averaged and ROIs ranked
// descending (ties by ROI index). Rows that already carry normalized columns
// keep them (ingest mode for published summary tables); otherwise the columns
// are recomputed from the balanced accuracies.
inline std::vector<RankedRoi> normalized_differences(
    std::vector<SummaryRow> rows) {
  if (rows.size() < 2)
    throw DataError("normalized_differences: need at least 2 ROIs");
  const bool have_nd =
      std::all_of(rows.begin(), rows.end(),
                  [](const SummaryRow& r) { return r.norm_diff.has_value(); });
  std::vector<RankedRoi> out;
  out.reserve(rows.size());
  if (have_nd) {
    for (const auto& r : rows) out.push_back({r.roi, *r.norm_diff, 0.0});
  } else {
    std::array<std::vector<double>, 3> d;
    for (int h = 0; h < 3; ++h) {
      for (const auto& r : rows) d[h].push_back(r.ba[h + 1] - r.ba[0]);
      const auto [mn, mx] = std::minmax_element(d[h].begin(), d[h].end());
      if (*mx - *mn <= 0.0)
        throw DegenerateError("normalized_differences: zero spread");
      for (double& v : d[h]) v = (v - *mn) / (*mx - *mn);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.push_back({rows[i].roi, {d[0][i], d[1][i], d[2][i]}, 0.0});
  }
  for (auto& r : out)
    r.average = (r.norm_diff[0] + r.norm_diff[1] + r.norm_diff[2]) / 3.0;
  std::sort(out.begin(), out.end(), [](const RankedRoi& a, const RankedRoi& b) {
    if (a.average != b.average) return a.average > b.average;
    return a.roi < b.roi;
  });
  return out;
}

}  // namespace qfmri::train
