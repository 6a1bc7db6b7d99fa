#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "colltraj/config.hpp"
#include "runner.hpp"

using namespace colltraj;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = COLLTRAJ_CONFIG_DIR;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("colltraj_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write_config(const std::string& name, const json& doc) const {
    const fs::path p = root_ / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }

  int run(std::vector<std::string> args) const {
    args.insert(args.begin(), "colltraj");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main_entry(static_cast<int>(argv.size()), argv.data());
  }

  fs::path root_;
};

json small_decay() {
  return json::parse(R"({
    "mode": "ensemble",
    "seed": 11,
    "dt": 0.01,
    "n_steps": 200,
    "environment": {"coupling": {"type": "point", "rate": 1.0}},
    "scheme": {"type": "photodetection"},
    "record": {"observables": ["n"], "stride": 10, "rho_stride": 50},
    "ensemble": {"trajectories": 40, "keep": 3}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_F(CliTest, EnsembleRunWritesOutputsAndManifest) {
  json doc = small_decay();
  doc["out_dir"] = (root_ / "a").string();
  const fs::path cfg = write_config("run.json", doc);
  ASSERT_EQ(run({cfg.string()}), cli::kOk);
  const fs::path dir = root_ / "a";
  for (const char* f : {"manifest.json", "ensemble.csv", "rho.csv", "trajectories.ndjson"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  // 20 records per kept trajectory, 3 kept.
  EXPECT_EQ(line_count(dir / "trajectories.ndjson"), 60u);
  EXPECT_EQ(line_count(dir / "ensemble.csv"), 21u);

  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["master_seed"], 11);
  EXPECT_EQ(manifest["version"], library_version());
  for (const auto& [name, digest] : manifest["outputs"].items())
    EXPECT_EQ(digest, cli::sha256_file(dir / name)) << name;
  EXPECT_EQ(manifest["outputs"].size(), 3u);
  EXPECT_EQ(parse_config(manifest["config"]), parse_config(doc));
  EXPECT_EQ(manifest["fingerprint"], config_fingerprint(parse_config(doc).trajectory));
}

TEST_F(CliTest, RerunIsByteIdentical) {
  json doc = small_decay();
  doc["out_dir"] = (root_ / "first").string();
  const fs::path cfg = write_config("run.json", doc);
  ASSERT_EQ(run({cfg.string()}), cli::kOk);
  ASSERT_EQ(run({cfg.string(), "--out-dir", (root_ / "second").string(), "--threads", "3"}), cli::kOk);
  for (const char* f : {"ensemble.csv", "rho.csv", "trajectories.ndjson"})
    EXPECT_EQ(slurp(root_ / "first" / f), slurp(root_ / "second" / f)) << f;
}

TEST_F(CliTest, OverridesApply) {
  json doc = small_decay();
  doc["out_dir"] = (root_ / "o").string();
  const fs::path cfg = write_config("run.json", doc);
  ASSERT_EQ(run({cfg.string(), "--seed", "5", "--set", "record.stride=25", "--set", "ensemble.keep=1"}), cli::kOk);
  const json manifest = json::parse(slurp(root_ / "o" / "manifest.json"));
  EXPECT_EQ(manifest["master_seed"], 5);
  EXPECT_EQ(line_count(root_ / "o" / "trajectories.ndjson"), 8u);
}

TEST_F(CliTest, TrajectoryModeUsesIndex) {
  json doc = small_decay();
  doc["mode"] = "trajectory";
  doc["out_dir"] = (root_ / "t").string();
  const fs::path cfg = write_config("run.json", doc);
  ASSERT_EQ(run({cfg.string(), "--index", "7"}), cli::kOk);
  const std::string text = slurp(root_ / "t" / "trajectories.ndjson");
  const json first = json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(first["trajectory"], 7);
  EXPECT_DOUBLE_EQ(first["time"].get<double>(), 0.1);
  EXPECT_EQ(json::parse(slurp(root_ / "t" / "manifest.json"))["trajectory_index"], 7);
}

TEST_F(CliTest, ConfigErrorsExitWithOne) {
  json doc = small_decay();
  doc["out_dir"] = (root_ / "bad").string();
  doc["environment"]["coupling"]["rate"] = -1.0;
  EXPECT_EQ(run({write_config("bad.json", doc).string()}), cli::kConfigFailure);
  EXPECT_FALSE(fs::exists(root_ / "bad"));
  EXPECT_EQ(run({(root_ / "missing.json").string()}), cli::kConfigFailure);
  std::ofstream(root_ / "broken.json") << "{\"mode\":";
  EXPECT_EQ(run({(root_ / "broken.json").string()}), cli::kConfigFailure);
  EXPECT_EQ(run({write_config("ok.json", small_decay()).string(), "--set", "nonsense"}), cli::kConfigFailure);
}

TEST_F(CliTest, NumericalFailureExitsWithTwoAndCleansUp) {
  // The conventional oracle rejects a step this coarse for a drive this strong,
  // after the collision ensemble has already written its files.
  json doc = small_decay();
  doc["mode"] = "compare";
  doc["out_dir"] = (root_ / "fail").string();
  doc["system"] = {{"dim", 2}, {"hamiltonian", {{"type", "driven_qubit"}, {"omega", 50.0}}}};
  doc["oracle"] = {{"kind", "mcwf"}};
  doc["ensemble"]["trajectories"] = 2;
  ASSERT_EQ(run({write_config("fail.json", doc).string()}), cli::kNumericalFailure);
  ASSERT_TRUE(fs::exists(root_ / "fail"));
  EXPECT_TRUE(fs::is_empty(root_ / "fail"));
}

TEST_F(CliTest, PrintConfigIsCanonical) {
  json doc = small_decay();
  const fs::path cfg = write_config("run.json", doc);
  testing::internal::CaptureStdout();
  ASSERT_EQ(run({cfg.string(), "--print-config"}), cli::kOk);
  const json printed = json::parse(testing::internal::GetCapturedStdout());
  EXPECT_EQ(printed, to_json(parse_config(doc)));
}

TEST_F(CliTest, SpectrumOutput) {
  json doc = json::parse(slurp(kConfigs / "spectrum.json"));
  doc["out_dir"] = (root_ / "s").string();
  ASSERT_EQ(run({write_config("spectrum.json", doc).string()}), cli::kOk);
  std::ifstream in(root_ / "s" / "spectrum.csv");
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "k,omega,signed_omega,kappa_re,kappa_im,kappa_abs2,density,lorentzian");
  std::getline(in, row);
  EXPECT_EQ(row.substr(0, 4), "0,0,");
  EXPECT_EQ(line_count(root_ / "s" / "spectrum.csv"), 1001u);
}

TEST(CliFormat, DoublesRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(cli::format_double(v)), v);
}
