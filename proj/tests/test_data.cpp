#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "qfmri/data.hpp"

using namespace qfmri;

namespace {

// Bandpower of a series in the 0.01-0.1 Hz band at 3 s sampling, via direct
// DFT evaluation. Used as the test-side separability oracle.
double bandpower(const std::vector<double>& x, double dt = 3.0) {
  const int n = static_cast<int>(x.size());
  const double pi = std::acos(-1.0);
  double power = 0.0;
  for (int k = 1; k <= n / 2; ++k) {
    const double f = k / (n * dt);
    if (f < 0.01 || f > 0.1) continue;
    double re = 0.0, im = 0.0;
    for (int t = 0; t < n; ++t) {
      re += x[t] * std::cos(2 * pi * k * t / n);
      im -= x[t] * std::sin(2 * pi * k * t / n);
    }
    power += (re * re + im * im) / n;
  }
  return power;
}

}  // namespace

TEST_CASE("standardize produces mean 0 and unit variance") {
  std::vector<double> x = {1.0, 4.0, -2.0, 7.0, 3.0, 3.0, 0.0, -5.0};
  data::standardize_series(x.data(), static_cast<int>(x.size()));
  double m = 0.0, v = 0.0;
  for (double t : x) m += t;
  m /= x.size();
  for (double t : x) v += (t - m) * (t - m);
  v /= x.size();
  CHECK(std::abs(m) < 1e-14);
  CHECK(std::abs(v - 1.0) < 1e-14);

  std::vector<double> flat(10, 3.0);
  CHECK_THROWS_AS(data::standardize_series(flat.data(), 10), DataError);
}

TEST_CASE("synthetic generation is deterministic and standardized") {
  data::SyntheticConfig cfg;
  cfg.n_healthy = 5;
  cfg.n_emci = 5;
  cfg.seed = 77;
  const auto a = data::generate_synthetic(cfg);
  const auto b = data::generate_synthetic(cfg);
  REQUIRE(a.size() == 10);
  CHECK(a[0].group == 0);
  CHECK(a[9].group == 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i].matrix == b[i].matrix);

  cfg.seed = 78;
  const auto c = data::generate_synthetic(cfg);
  CHECK(a[0].matrix != c[0].matrix);

  for (int roi : {1, 60, 116}) {
    const auto s = a[3].roi_series(roi);
    double m = 0.0;
    for (double v : s) m += v;
    CHECK(std::abs(m / s.size()) < 1e-12);
  }

  cfg.separation = 1.5;
  CHECK_THROWS_AS(data::generate_synthetic(cfg), DataError);
  cfg.separation = 0.5;
  cfg.affected_rois = {0};
  CHECK_THROWS_AS(data::generate_synthetic(cfg), DataError);
}

TEST_CASE("dataset save and load round-trip at 64-bit precision") {
  data::SyntheticConfig cfg;
  cfg.n_healthy = 3;
  cfg.n_emci = 2;
  cfg.seed = 5;
  const auto records = data::generate_synthetic(cfg);
  const std::string path = "roundtrip_dataset_test.csv";
  data::save_dataset(path, records);
  const auto loaded = data::load_dataset(path);
  std::remove(path.c_str());

  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].subject_id == records[i].subject_id);
    CHECK(loaded[i].group == records[i].group);
    // generator output is already standardized, so load-time standardization
    // is an idempotent map up to rounding
    for (std::size_t j = 0; j < records[i].matrix.size(); ++j)
      CHECK(std::abs(loaded[i].matrix[j] - records[i].matrix[j]) < 1e-12);
  }
}

TEST_CASE("load rejects malformed datasets") {
  const std::string path = "malformed_dataset_test.csv";
  {
    std::ofstream out(path);
    out << "wrong,header\n";
  }
  CHECK_THROWS_AS(data::load_dataset(path), ParseError);
  {
    std::ofstream out(path);
    out << "subject_id,group,roi";
    for (int t = 0; t < 140; ++t) out << ",t" << t;
    out << "\nS1,0,1";
    for (int t = 0; t < 139; ++t) out << ",0.5";  // one point short
    out << "\n";
  }
  CHECK_THROWS_AS(data::load_dataset(path), ShapeError);
  {
    std::ofstream out(path);
    out << "subject_id,group,roi";
    for (int t = 0; t < 140; ++t) out << ",t" << t;
    out << "\nS1,0,1";
    for (int t = 0; t < 140; ++t) out << "," << std::sin(0.3 * t);
    out << "\n";  // rois 2..116 missing
  }
  CHECK_THROWS_AS(data::load_dataset(path), ParseError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(data::load_dataset("no_such_dataset.csv"), DataError);
}

TEST_CASE("roi_slice extracts labeled per-roi samples") {
  data::SyntheticConfig cfg;
  cfg.n_healthy = 4;
  cfg.n_emci = 3;
  cfg.seed = 9;
  const auto records = data::generate_synthetic(cfg);
  const auto samples = data::roi_slice(records, 42);
  REQUIRE(samples.size() == 7);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(samples[i].roi == 42);
    CHECK(samples[i].label == records[i].group);
    CHECK(samples[i].series == records[i].roi_series(42));
  }
  CHECK_THROWS_AS(data::roi_slice(records, 117), DataError);
}

TEST_CASE("stratified k-fold partitions with balanced class shares") {
  std::vector<int> labels;
  for (int i = 0; i < 483; ++i) labels.push_back(0);
  for (int i = 0; i < 307; ++i) labels.push_back(1);
  std::mt19937_64 shuf(3);
  std::shuffle(labels.begin(), labels.end(), shuf);

  const auto folds = data::stratified_kfold(labels, 5, 11);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    // 790 / 5 = 158; per-class round-robin puts each fold within one sample
    CHECK(f.test.size() >= 157);
    CHECK(f.test.size() <= 159);
    CHECK(f.train.size() + f.test.size() == labels.size());
    long pos = 0;
    for (auto i : f.test) {
      CHECK(seen.insert(i).second);  // pairwise disjoint
      pos += labels[i];
    }
    // 307/5 = 61.4: round-robin deal keeps each fold within one sample
    CHECK(pos >= 61);
    CHECK(pos <= 62);
    // train/test disjoint
    std::set<std::size_t> tr(f.train.begin(), f.train.end());
    for (auto i : f.test) CHECK(tr.count(i) == 0);
  }
  CHECK(seen.size() == labels.size());

  CHECK_THROWS_AS(data::stratified_kfold(labels, 1, 0), DataError);
  std::vector<int> single(10, 0);
  CHECK_THROWS_AS(data::stratified_kfold(single, 5, 0), DataError);
}

TEST_CASE("k-fold is seed-deterministic") {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 2);
  const auto a = data::stratified_kfold(labels, 5, 123);
  const auto b = data::stratified_kfold(labels, 5, 123);
  const auto c = data::stratified_kfold(labels, 5, 124);
  for (int f = 0; f < 5; ++f) {
    CHECK(a[f].test == b[f].test);
    CHECK(a[f].train == b[f].train);
  }
  bool any_diff = false;
  for (int f = 0; f < 5; ++f) any_diff |= (a[f].test != c[f].test);
  CHECK(any_diff);
}

TEST_CASE("class weights match N / (2 N_c)") {
  std::vector<int> labels;
  for (int i = 0; i < 483; ++i) labels.push_back(0);
  for (int i = 0; i < 307; ++i) labels.push_back(1);
  const auto w = data::class_weights(labels);
  CHECK(std::abs(w[0] - 790.0 / (2 * 483.0)) < 1e-15);
  CHECK(std::abs(w[1] - 790.0 / (2 * 307.0)) < 1e-15);
  CHECK(std::abs(w[0] - 0.8178053830227743) < 1e-12);
  CHECK(std::abs(w[1] - 1.2866449511400652) < 1e-12);
  std::vector<int> single(5, 1);
  CHECK_THROWS_AS(data::class_weights(single), DataError);
}

TEST_CASE("mix_seed separates nearby inputs") {
  CHECK(data::mix_seed(1, 2) == data::mix_seed(1, 2));
  CHECK(data::mix_seed(1, 2) != data::mix_seed(1, 3));
  CHECK(data::mix_seed(1, 2) != data::mix_seed(2, 2));
  CHECK(data::mix_seed(0, 0) != 0);
}

TEST_CASE("config file parsing") {
  const std::string path = "synthetic_config_test.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "n_healthy = 12\n";
    out << "n_emci=34\n";
    out << "separation = 0.25\n";
    out << "seed = 99\n";
    out << "affected_rois = 3, 5, 7\n";
  }
  const auto cfg = data::parse_synthetic_config(path);
  CHECK(cfg.n_healthy == 12);
  CHECK(cfg.n_emci == 34);
  CHECK(cfg.separation == 0.25);
  CHECK(cfg.seed == 99);
  CHECK(cfg.affected_rois == std::vector<int>{3, 5, 7});
  {
    std::ofstream out(path);
    out << "bogus_key = 1\n";
  }
  CHECK_THROWS_AS(data::parse_synthetic_config(path), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("separation-1 data is separable by the bandpower oracle") {
  data::SyntheticConfig cfg;
  cfg.n_healthy = 100;
  cfg.n_emci = 100;
  cfg.separation = 1.0;
  cfg.seed = 2024;
  const auto records = data::generate_synthetic(cfg);

  // threshold classifier on affected-roi bandpower, split half/half
  std::vector<std::pair<double, int>> train, test;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double f = bandpower(records[i].roi_series(1));
    ((i % 2 == 0) ? train : test).push_back({f, records[i].group});
  }
  double best_thr = 0.0, best_ba = 0.0;
  for (const auto& [thr, lab] : train) {
    long tp = 0, fn = 0, tn = 0, fp = 0;
    for (const auto& [f, y] : train) {
      const int pred = f > thr ? 1 : 0;
      if (y == 1) (pred ? tp : fn)++; else (pred ? fp : tn)++;
    }
    const double ba = 0.5 * (double(tp) / (tp + fn) + double(tn) / (tn + fp));
    if (ba > best_ba) { best_ba = ba; best_thr = thr; }
  }
  long tp = 0, fn = 0, tn = 0, fp = 0;
  for (const auto& [f, y] : test) {
    const int pred = f > best_thr ? 1 : 0;
    if (y == 1) (pred ? tp : fn)++; else (pred ? fp : tn)++;
  }
  const double ba = 0.5 * (double(tp) / (tp + fn) + double(tn) / (tn + fp));
  CHECK(ba >= 0.95);
}

TEST_CASE("separation-0 data carries no class signal for the oracle") {
  data::SyntheticConfig cfg;
  cfg.n_healthy = 100;
  cfg.n_emci = 100;
  cfg.separation = 0.0;
  cfg.seed = 31337;
  const auto records = data::generate_synthetic(cfg);
  // group-mean bandpower difference should be small relative to the spread
  double m0 = 0, m1 = 0, s0 = 0, s1 = 0;
  std::vector<double> f0, f1;
  for (const auto& r : records)
    (r.group == 0 ? f0 : f1).push_back(bandpower(r.roi_series(1)));
  for (double v : f0) m0 += v;
  for (double v : f1) m1 += v;
  m0 /= f0.size();
  m1 /= f1.size();
  for (double v : f0) s0 += (v - m0) * (v - m0);
  for (double v : f1) s1 += (v - m1) * (v - m1);
  const double sd = std::sqrt((s0 + s1) / (f0.size() + f1.size() - 2));
  CHECK(std::abs(m0 - m1) < 0.5 * sd);
}
