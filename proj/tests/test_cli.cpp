#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qfmri/manifest.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = QFMRI_BIN;
const std::string kSummaryFixture =
    std::string(QFMRI_SOURCE_DIR) + "/data/roi_balanced_accuracy_summary.csv";
const std::string kLobeFixture =
    std::string(QFMRI_SOURCE_DIR) + "/data/aal_lobes.csv";

struct CmdResult {
  int exit_code;
  std::string out;
};

CmdResult run(const std::string& args) {
  const std::string out_file =
      (fs::temp_directory_path() / "qfmri_cli_test_out.txt").string();
  const std::string cmd = kBin + " " + args + " > " + out_file + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CmdResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / "qfmri_cli_case";
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  fs::path path_;
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("").exit_code == 2);
  CHECK(run("no-such-command").exit_code == 2);
  CHECK(run("train").exit_code == 2);               // missing --dataset
  CHECK(run("param-count").exit_code == 2);         // missing positional
  CHECK(run("gen-data --bogus-flag 1").exit_code == 2);
}

TEST_CASE("data errors exit with code 1") {
  TempDir tmp;
  CHECK(run("--out-dir " + tmp.str() +
            " train --dataset missing.csv --roi 1 --spec baseline")
            .exit_code == 1);
  CHECK(run("--out-dir " + tmp.str() + " rank --summary missing.csv")
            .exit_code == 1);
}

TEST_CASE("param-count prints the published totals") {
  CHECK(run("param-count baseline").out == "11065\n");
  CHECK(run("param-count hybrid1").out == "9983\n");
  CHECK(run("param-count hybrid2").out == "8901\n");
  CHECK(run("param-count hybrid4").out == "4177\n");
  const auto all = run("param-count all");
  CHECK(all.exit_code == 0);
  CHECK(all.out.find("baseline 11065") != std::string::npos);
  CHECK(run("param-count hybrid9").exit_code == 1);
}

TEST_CASE("gen-data, train and sbfc run end to end with manifests") {
  TempDir tmp;
  const std::string ds = tmp.file("ds.csv");
  auto gen = run("--seed 5 --out-dir " + tmp.str() +
                 " gen-data --n-healthy 10 --n-emci 10 --separation 1.0 "
                 "--out " + ds);
  REQUIRE(gen.exit_code == 0);
  REQUIRE(fs::exists(ds));
  REQUIRE(fs::exists(ds + ".manifest.json"));

  // manifest parses and its artifact hash matches a recompute
  nlohmann::json m;
  std::ifstream(ds + ".manifest.json") >> m;
  CHECK(m["command"] == "gen-data");
  CHECK(m["seed"] == 5);
  char hex[19];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(qfmri::manifest::file_hash(ds)));
  CHECK(m["artifacts"][0]["fnv1a64"] == std::string(hex));

  auto tr = run("--seed 5 --out-dir " + tmp.str() + " train --dataset " + ds +
                " --roi 1 --spec hybrid4 --fold 0 --epochs 2");
  REQUIRE(tr.exit_code == 0);
  const double ba = std::stod(tr.out);
  CHECK(ba >= 0.0);
  CHECK(ba <= 1.0);
  CHECK(fs::exists(tmp.file("model_hybrid4_roi1_fold0.bin")));
  CHECK(fs::exists(tmp.file("model_hybrid4_roi1_fold0.bin.metrics.csv")));

  auto sb = run("--seed 5 --out-dir " + tmp.str() + " sbfc --dataset " + ds +
                " --seeds 1,38 --lobe-map " + kLobeFixture);
  REQUIRE(sb.exit_code == 0);
  CHECK(sb.out.rfind("significant_edges,", 0) == 0);
  CHECK(fs::exists(tmp.file("sbfc_significance.csv")));
  CHECK(fs::exists(tmp.file("sbfc_lobe_edges.csv")));
}

TEST_CASE("train with the same seed is reproducible across invocations") {
  TempDir tmp;
  const std::string ds = tmp.file("ds.csv");
  REQUIRE(run("--seed 9 --out-dir " + tmp.str() +
              " gen-data --n-healthy 8 --n-emci 8 --separation 1.0 --out " +
              ds).exit_code == 0);
  const std::string args = "--seed 9 --out-dir " + tmp.str() +
                           " train --dataset " + ds +
                           " --roi 2 --spec baseline --fold 1 --epochs 2";
  const auto a = run(args);
  const auto b = run(args);
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("sweep writes results and summary csvs") {
  TempDir tmp;
  const std::string ds = tmp.file("ds.csv");
  REQUIRE(run("--seed 3 --out-dir " + tmp.str() +
              " gen-data --n-healthy 8 --n-emci 8 --separation 1.0 --out " +
              ds).exit_code == 0);
  auto sw = run("--seed 3 --workers 4 --out-dir " + tmp.str() +
                " sweep --dataset " + ds +
                " --rois 1 --specs baseline,hybrid4 --epochs 1");
  REQUIRE(sw.exit_code == 0);
  REQUIRE(fs::exists(tmp.file("sweep_results.csv")));
  REQUIRE(fs::exists(tmp.file("sweep_summary.csv")));
  std::ifstream results(tmp.file("sweep_results.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(results, line)) ++lines;
  CHECK(lines == 11);  // header + 2 specs x 5 folds
}

TEST_CASE("rank on the published fixture prints the expected top rows") {
  TempDir tmp;
  auto rk = run("--out-dir " + tmp.str() + " rank --summary " +
                kSummaryFixture + " --top 9");
  REQUIRE(rk.exit_code == 0);
  std::stringstream ss(rk.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(ss, line)) lines.push_back(line);
  REQUIRE(lines.size() == 9);
  CHECK(lines[0] == "1,1,0.965");
  CHECK(lines[1].rfind("2,84,", 0) == 0);
  CHECK(lines[8].rfind("9,110,", 0) == 0);
  CHECK(fs::exists(tmp.file("ranking.csv")));
}

TEST_CASE("ttest emits all six model pairings") {
  TempDir tmp;
  auto tt = run("--out-dir " + tmp.str() + " ttest --summary " +
                kSummaryFixture);
  REQUIRE(tt.exit_code == 0);
  std::stringstream ss(tt.out);
  std::string line;
  int rows = 0;
  bool saw_b_h1 = false;
  while (std::getline(ss, line)) {
    if (line.rfind("model_a", 0) == 0) continue;
    ++rows;
    if (line.rfind("baseline,hybrid1,", 0) == 0) {
      saw_b_h1 = true;
      CHECK(line.find("-15.64") != std::string::npos);
    }
  }
  CHECK(rows == 6);
  CHECK(saw_b_h1);
  CHECK(fs::exists(tmp.file("ttests.csv")));
}
