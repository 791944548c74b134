#pragma once

// Dataset ingestion and synthesis. Canonical interchange format is CSV with
// header `subject_id,group,roi,t0,...,t139`, one row per subject x ROI,
// 116 ROI rows per subject. Series are standardized (mean 0, std 1) at load.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qfmri/errors.hpp"

namespace qfmri::data {

inline constexpr int kNumRois = 116;
inline constexpr int kSeriesLen = 140;

struct Sample {
  std::vector<double> series;  // 140 points
  int label;                   // 0 = healthy, 1 = EMCI
  std::string subject_id;
  int roi;  // 1..116
};

struct SubjectRecord {
  std::string subject_id;
  int group;                   // 0 = healthy, 1 = EMCI
  std::vector<double> matrix;  // 116 x 140 row-major

  std::vector<double> roi_series(int roi) const {
    if (roi < 1 || roi > kNumRois)
      throw DataError("roi " + std::to_string(roi) + " out of range 1..116");
    const auto* p = matrix.data() + static_cast<std::size_t>(roi - 1) * kSeriesLen;
    return std::vector<double>(p, p + kSeriesLen);
  }
};

struct FoldSplit {
  int fold;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline void standardize_series(double* p, int n) {
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += p[i];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
  var /= n;
  if (var <= 0.0) throw DataError("standardize_series: flat series");
  const double inv = 1.0 / std::sqrt(var);
  for (int i = 0; i < n; ++i) p[i] = (p[i] - mean) * inv;
}

inline void save_dataset(const std::string& path,
                         const std::vector<SubjectRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("save_dataset: cannot open " + path);
  out << "subject_id,group,roi";
  for (int t = 0; t < kSeriesLen; ++t) out << ",t" << t;
  out << "\n";
  char buf[32];
  for (const auto& r : records) {
    for (int roi = 1; roi <= kNumRois; ++roi) {
      out << r.subject_id << ',' << r.group << ',' << roi;
      const double* p = r.matrix.data() + (roi - 1) * kSeriesLen;
      for (int t = 0; t < kSeriesLen; ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g", p[t]);
        out << ',' << buf;
      }
      out << "\n";
    }
  }
}

inline std::vector<SubjectRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("load_dataset: empty file " + path);
  if (line.rfind("subject_id,group,roi", 0) != 0)
    throw ParseError("load_dataset: unexpected header in " + path);

  std::vector<SubjectRecord> records;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string subject, field;
    if (!std::getline(ss, subject, ','))
      throw ParseError("load_dataset: malformed line " +
                       std::to_string(line_no));
    int group, roi;
    try {
      std::getline(ss, field, ',');
      group = std::stoi(field);
      std::getline(ss, field, ',');
      roi = std::stoi(field);
    } catch (const std::exception&) {
      throw ParseError("load_dataset: malformed line " +
                       std::to_string(line_no));
    }
    if (group != 0 && group != 1)
      throw ParseError("load_dataset: bad group at line " +
                       std::to_string(line_no));
    if (roi < 1 || roi > kNumRois)
      throw ParseError("load_dataset: bad roi at line " +
                       std::to_string(line_no));
    std::vector<double> series;
    series.reserve(kSeriesLen);
    while (std::getline(ss, field, ',')) {
      try {
        series.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ParseError("load_dataset: bad value at line " +
                         std::to_string(line_no));
      }
    }
    if (static_cast<int>(series.size()) != kSeriesLen)
      throw ShapeError("load_dataset: line " + std::to_string(line_no) +
                       " has " + std::to_string(series.size()) +
                       " points, expected 140");

    auto it = index.find(subject);
    if (it == index.end()) {
      SubjectRecord rec;
      rec.subject_id = subject;
      rec.group = group;
      rec.matrix.assign(static_cast<std::size_t>(kNumRois) * kSeriesLen,
                        std::numeric_limits<double>::quiet_NaN());
      index[subject] = records.size();
      records.push_back(std::move(rec));
      it = index.find(subject);
    }
    SubjectRecord& rec = records[it->second];
    if (rec.group != group)
      throw ParseError("load_dataset: conflicting group for subject " +
                       subject);
    double* dst = rec.matrix.data() +
                  static_cast<std::size_t>(roi - 1) * kSeriesLen;
    if (!std::isnan(dst[0]))
      throw ParseError("load_dataset: duplicate (subject, roi) at line " +
                       std::to_string(line_no));
    std::copy(series.begin(), series.end(), dst);
  }
  for (auto& rec : records) {
    for (int roi = 1; roi <= kNumRois; ++roi) {
      double* p = rec.matrix.data() +
                  static_cast<std::size_t>(roi - 1) * kSeriesLen;
      if (std::isnan(p[0]))
        throw ParseError("load_dataset: subject " + rec.subject_id +
                         " is missing roi " + std::to_string(roi));
      standardize_series(p, kSeriesLen);
    }
  }
  return records;
}

inline std::vector<Sample> roi_slice(const std::vector<SubjectRecord>& records,
                                     int roi) {
  if (roi < 1 || roi > kNumRois)
    throw DataError("roi_slice: roi " + std::to_string(roi) +
                    " out of range 1..116");
  std::vector<Sample> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({r.roi_series(roi), r.group, r.subject_id, roi});
  return out;
}

struct SyntheticConfig {
  int n_healthy = 200;
  int n_emci = 200;
  double separation = 1.0;  // in [0,1]
  std::vector<int> affected_rois = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  std::uint64_t seed = 1;
  double sample_period_s = 3.0;  // repetition time
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per subject: every ROI is AR(1) noise (coefficient 0.5). EMCI subjects
// additionally receive, in the affected ROIs, a shared band-limited sinusoid
// (0.01-0.1 Hz, amplitude proportional to `separation`, one random frequency
// and phase per subject). Sharing the component across affected ROIs makes
// them mutually correlated, which drives both the classification signal and
// the connectivity group difference. Every series is standardized.
inline std::vector<SubjectRecord> generate_synthetic(
    const SyntheticConfig& cfg) {
  if (cfg.n_healthy < 1 || cfg.n_emci < 1)
    throw DataError("generate_synthetic: need at least one subject per group");
  if (cfg.separation < 0.0 || cfg.separation > 1.0)
    throw DataError("generate_synthetic: separation must be in [0,1]");
  std::vector<bool> affected(kNumRois + 1, false);
  for (int roi : cfg.affected_rois) {
    if (roi < 1 || roi > kNumRois)
      throw DataError("generate_synthetic: affected roi out of range");
    affected[roi] = true;
  }

  const double amplitude = 12.0 * cfg.separation;
  std::vector<SubjectRecord> records;
  const int total = cfg.n_healthy + cfg.n_emci;
  records.reserve(total);
  for (int s = 0; s < total; ++s) {
    SubjectRecord rec;
    rec.group = s < cfg.n_healthy ? 0 : 1;
    rec.subject_id =
        (rec.group == 0 ? "H" : "E") + std::string("_") + std::to_string(s);
    rec.matrix.resize(static_cast<std::size_t>(kNumRois) * kSeriesLen);

    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> freq(0.01, 0.1);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::acos(-1.0));

    const double f = freq(rng);
    const double ph = phase(rng);
    std::vector<double> common(kSeriesLen);
    for (int t = 0; t < kSeriesLen; ++t)
      common[t] =
          std::sin(2.0 * std::acos(-1.0) * f * cfg.sample_period_s * t + ph);

    for (int roi = 1; roi <= kNumRois; ++roi) {
      double* p = rec.matrix.data() +
                  static_cast<std::size_t>(roi - 1) * kSeriesLen;
      double prev = 0.0;
      for (int t = 0; t < kSeriesLen; ++t) {
        prev = 0.5 * prev + gauss(rng);
        p[t] = prev;
      }
      if (rec.group == 1 && affected[roi] && amplitude > 0.0)
        for (int t = 0; t < kSeriesLen; ++t) p[t] += amplitude * common[t];
      standardize_series(p, kSeriesLen);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// Stratified k-fold: indices of each class are shuffled, then dealt
// round-robin across folds; fold i's share is its test set.
inline std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels,
                                               int k, std::uint64_t seed) {
  if (k < 2) throw DataError("stratified_kfold: k must be >= 2");
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw DataError("stratified_kfold: labels must be binary");
    by_class[labels[i]].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty())
    throw DataError("stratified_kfold: both classes must be present");

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> fold_members(k);
  for (auto& cls : by_class) {
    std::shuffle(cls.begin(), cls.end(), rng);
    for (std::size_t i = 0; i < cls.size(); ++i)
      fold_members[i % k].push_back(cls[i]);
  }
  std::vector<FoldSplit> splits;
  for (int f = 0; f < k; ++f) {
    FoldSplit s;
    s.fold = f;
    s.test = fold_members[f];
    for (int g = 0; g < k; ++g)
      if (g != f)
        s.train.insert(s.train.end(), fold_members[g].begin(),
                       fold_members[g].end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

// w_c = N / (2 N_c)
inline std::array<double, 2> class_weights(const std::vector<int>& labels) {
  double n0 = 0, n1 = 0;
  for (int l : labels) (l == 0 ? n0 : n1) += 1.0;
  if (n0 == 0 || n1 == 0)
    throw DataError("class_weights: both classes must be present");
  const double n = n0 + n1;
  return {n / (2.0 * n0), n / (2.0 * n1)};
}

// Synthetic-config file: `key = value` lines; keys n_healthy, n_emci,
// separation, seed, affected_rois (comma-separated list).
inline SyntheticConfig parse_synthetic_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("parse_synthetic_config: cannot open " + path);
  SyntheticConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "n_healthy") cfg.n_healthy = std::stoi(val);
      else if (key == "n_emci") cfg.n_emci = std::stoi(val);
      else if (key == "separation") cfg.separation = std::stod(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "affected_rois") {
        cfg.affected_rois.clear();
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ','))
          cfg.affected_rois.push_back(std::stoi(trim(tok)));
      } else {
        throw ConfigError("parse_synthetic_config: unknown key '" + key +
                          "' at line " + std::to_string(line_no));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("parse_synthetic_config: bad value at line " +
                        std::to_string(line_no));
    }
  }
  return cfg;
}

}  // namespace qfmri::data
