#pragma once

// Seed-based functional connectivity: per-subject seed correlation maps
// (Fisher z-transformed), Welch group-difference tests per target ROI, and
// the lobe-level edge summary.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qfmri/data.hpp"
#include "qfmri/errors.hpp"
#include "qfmri/stats.hpp"

namespace qfmri::sbfc {

inline double fisher_z(double r) {
  const double limit = 1.0 - 1e-12;
  return std::atanh(std::clamp(r, -limit, limit));
}

struct ConnectivityMap {
  std::string subject_id;
  int seed;
  std::array<double, data::kNumRois> r;  // index roi-1; self = 1
  std::array<double, data::kNumRois> z;
};

inline ConnectivityMap seed_map(const data::SubjectRecord& record, int seed) {
  if (seed < 1 || seed > data::kNumRois)
    throw DataError("seed_map: seed roi out of range");
  ConnectivityMap m;
  m.subject_id = record.subject_id;
  m.seed = seed;
  const auto seed_series = record.roi_series(seed);
  for (int roi = 1; roi <= data::kNumRois; ++roi) {
    double r = roi == seed
                   ? 1.0
                   : stats::pearson(seed_series, record.roi_series(roi));
    m.r[roi - 1] = r;
    m.z[roi - 1] = fisher_z(r);
  }
  return m;
}

struct GroupDiffResult {
  int seed;
  // per target ROI (index roi-1); the seed's own slot holds NaN
  std::array<double, data::kNumRois> t;
  std::array<double, data::kNumRois> p;
  std::vector<int> significant;  // targets with |t| > 2.0 and p < 0.05
};

inline GroupDiffResult group_difference(
    const std::vector<data::SubjectRecord>& records, int seed) {
  std::vector<ConnectivityMap> healthy, emci;
  for (const auto& rec : records) {
    auto m = seed_map(rec, seed);
    (rec.group == 0 ? healthy : emci).push_back(std::move(m));
  }
  if (healthy.size() < 2 || emci.size() < 2)
    throw DataError("group_difference: each group needs >= 2 subjects");

  GroupDiffResult out;
  out.seed = seed;
  out.t.fill(std::numeric_limits<double>::quiet_NaN());
  out.p.fill(std::numeric_limits<double>::quiet_NaN());
  std::vector<double> za(healthy.size()), zb(emci.size());
  for (int roi = 1; roi <= data::kNumRois; ++roi) {
    if (roi == seed) continue;
    for (std::size_t i = 0; i < healthy.size(); ++i)
      za[i] = healthy[i].z[roi - 1];
    for (std::size_t i = 0; i < emci.size(); ++i) zb[i] = emci[i].z[roi - 1];
    const auto tt = stats::welch_ttest(za, zb);
    out.t[roi - 1] = tt.t;
    out.p[roi - 1] = tt.p_two_tail;
    if (std::fabs(tt.t) > 2.0 && tt.p_two_tail < 0.05)
      out.significant.push_back(roi);
  }
  return out;
}

// ROI -> lobe map file: CSV `roi,lobe`, lobe in {frontal, temporal,
// occipital, parietal, posterior_fossa}; all 116 ROIs must be mapped.
inline std::map<int, std::string> load_lobe_map(const std::string& path) {
  static const std::vector<std::string> kLobes = {
      "frontal", "temporal", "occipital", "parietal", "posterior_fossa"};
  std::ifstream in(path);
  if (!in) throw ConfigError("load_lobe_map: cannot open " + path);
  std::map<int, std::string> map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("roi,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string roi_s, lobe;
    if (!std::getline(ss, roi_s, ',') || !std::getline(ss, lobe, ','))
      throw ConfigError("load_lobe_map: malformed line " +
                        std::to_string(line_no));
    while (!lobe.empty() && (lobe.back() == '\r' || lobe.back() == ' '))
      lobe.pop_back();
    if (std::find(kLobes.begin(), kLobes.end(), lobe) == kLobes.end())
      throw ConfigError("load_lobe_map: unknown lobe '" + lobe + "' at line " +
                        std::to_string(line_no));
    map[std::stoi(roi_s)] = lobe;
  }
  return map;
}

struct LobeEdge {
  std::string seed_lobe;
  std::string target_lobe;
  long count;
};

struct LobeSummary {
  std::vector<LobeEdge> edges;
  long total = 0;
};

inline LobeSummary summarize_lobes(const std::vector<GroupDiffResult>& diffs,
                                   const std::map<int, std::string>& lobe_map) {
  std::map<std::pair<std::string, std::string>, long> counts;
  long total = 0;
  auto lobe_of = [&](int roi) -> const std::string& {
    auto it = lobe_map.find(roi);
    if (it == lobe_map.end())
      throw ConfigError("summarize_lobes: roi " + std::to_string(roi) +
                        " missing from lobe map");
    return it->second;
  };
  for (const auto& d : diffs) {
    const std::string& sl = lobe_of(d.seed);
    for (int target : d.significant) {
      counts[{sl, lobe_of(target)}] += 1;
      ++total;
    }
  }
  LobeSummary s;
  s.total = total;
  for (const auto& [key, n] : counts)
    s.edges.push_back({key.first, key.second, n});
  return s;
}

}  // namespace qfmri::sbfc
