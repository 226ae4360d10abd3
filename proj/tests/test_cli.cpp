#include "tnt/cli/commands.hpp"
#include "tnt/cli/config.hpp"
#include "tnt/cli/output.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tnt;
using namespace tnt::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("tntsim_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_config(const std::string& name, const json& cfg) const {
    std::ofstream(path(name)) << cfg.dump();
    return path(name);
  }

  int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "tntsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static json read_json(const fs::path& p) { return json::parse(slurp(p)); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

json run_config(json extra = json::object()) {
  json cfg = {{"N", 20}, {"t1", 0.05}, {"readout", "echo"}};
  cfg.update(extra);
  return cfg;
}

}  // namespace

TEST(Output, Fnv1a64KnownVectors) {
  EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
  EXPECT_EQ(hex64(fnv1a64("foobar")), "85944171f73967e8");
}

TEST(Output, NumberFormat) {
  EXPECT_EQ(format_number(1.0), "1.000000000000e+00");
  EXPECT_EQ(format_number(-0.0271), "-2.710000000000e-02");
}

TEST(Output, CsvLayout) {
  Table t;
  t.columns = {"sigma", "fc"};
  t.add_row({0.5, 120.0});
  t.add_row({1.0, 80.25});
  EXPECT_THROW(t.add_row({1.0}), std::logic_error);
  const std::string text = csv_text(t, "00000000000000ff");
  EXPECT_EQ(text,
            "# config_hash=00000000000000ff\n"
            "sigma,fc\n"
            "5.000000000000e-01,1.200000000000e+02\n"
            "1.000000000000e+00,8.025000000000e+01\n");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const json j = table_json(t, "00000000000000ff");
  EXPECT_EQ(j["columns"], json({"sigma", "fc"}));
  EXPECT_EQ(j["data"]["fc"][1], 80.25);
}

TEST(Output, QGridLayout) {
  QGrid g{2, 3, true, {0, 0.5, 1, 0.25, 0.75, 0.125}};
  const std::string text = qgrid_csv_text(g, "abc");
  std::istringstream in(text);
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "n_theta=2,n_phi=3,normalized=true,config_hash=abc");
  EXPECT_EQ(row1, "2.500000000000e-01,7.500000000000e-01,1.250000000000e-01");
}

TEST_F(CliTest, OutputSetRollback) {
  OutputSet set(dir_ / "o", "csv", "h");
  Table t{{"x"}, {}};
  set.table("a", t);
  set.json("b", json::object());
  EXPECT_TRUE(fs::exists(dir_ / "o" / "a.csv"));
  EXPECT_EQ(read_json(dir_ / "o" / "b.json")["config_hash"], "h");
  set.rollback();
  EXPECT_FALSE(fs::exists(dir_ / "o" / "a.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "o" / "b.json"));
  EXPECT_TRUE(set.files().empty());
}

TEST(Config, UnknownKeyIsNamed) {
  RunConfig cfg;
  try {
    apply_json(cfg, {{"N", 10}, {"sigmaa", 1.0}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sigmaa"), std::string::npos);
  }
  EXPECT_THROW(apply_json(cfg, {{"search", {{"grids", 10}}}}), ConfigError);
  EXPECT_THROW(apply_json(cfg, {{"sigmas", {{"start", 0}, {"stop", 1}}}}), ConfigError);
  EXPECT_THROW(apply_json(cfg, {{"N", 10.5}}), ConfigError);
  EXPECT_THROW(apply_json(cfg, {{"t1", "soon"}}), ConfigError);
}

TEST(Config, ValuesAndRanges) {
  RunConfig cfg;
  apply_json(cfg, {{"lambda", "inf"},
                   {"sigmas", {{"start", 0}, {"stop", 1}, {"step", 0.25}}},
                   {"rotation", {{"axis", {2, 0, 0}}, {"angle", 0.5}}}});
  EXPECT_TRUE(std::isinf(cfg.lambda));
  EXPECT_EQ(cfg.sigmas, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  ASSERT_TRUE(cfg.rotation);
  EXPECT_DOUBLE_EQ(cfg.rotation->axis.x(), 1.0);
  apply_json(cfg, {{"rotation", nullptr}});
  EXPECT_FALSE(cfg.rotation);
}

TEST(Config, PresetsValidate) {
  for (const auto& name : preset_names()) {
    RunConfig cfg;
    apply_json(cfg, preset_defaults(name));
    EXPECT_NO_THROW(validate(cfg)) << name;
    EXPECT_EQ(cfg.preset, name);
  }
  EXPECT_THROW(preset_defaults("fig7"), ConfigError);
}

TEST(Config, ValidationRejectsBadPhysics) {
  auto rejects = [](const json& fragment) {
    RunConfig cfg;
    apply_json(cfg, fragment);
    EXPECT_THROW(validate(cfg), ConfigError) << fragment.dump();
  };
  rejects({{"N", 0}});
  rejects({{"lambda", -1.0}});
  rejects({{"sigma", -0.5}});
  rejects({{"t1", -0.1}});
  rejects({{"readout", "mirror"}});
  rejects({{"hamiltonian", "xyz"}});
  rejects({{"measurement", "sy"}});
  rejects({{"format", "xml"}});
  rejects({{"readout", "asymmetric_echo"}, {"t1", 0.1}, {"t2", 0.1}});
  rejects({{"preset", "fig4"}, {"sigmas", {2.0, 1.0}}});
  rejects({{"preset", "fig6"}, {"total_time", 0.1}, {"t1_grid", {0.05, 0.1}}});
  rejects({{"search", {{"grid", 2}}}});
}

TEST(Config, HashIgnoresOutputLocation) {
  RunConfig a, b;
  b.out = "elsewhere";
  b.threads = 3;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.sigma = 1.0;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli({"--help"}), 0);
  EXPECT_EQ(cli({}), 2);
  EXPECT_EQ(cli({"fig", "fig9", "--out", path("o")}), 2);
  EXPECT_EQ(cli({"fig", "fig1", "--bogus"}), 2);
  EXPECT_EQ(cli({"run", "--out", path("o")}), 2);
  EXPECT_EQ(cli({"run", "--config", path("missing.json")}), 2);
  std::ofstream(path("broken.json")) << "{\"N\": ";
  EXPECT_EQ(cli({"run", "--config", path("broken.json")}), 2);
  EXPECT_EQ(cli({"run", "--config", write_config("c.json", run_config()), "--lambda", "x"}), 2);
}

TEST_F(CliTest, UnknownConfigKeyExitsTwoAndNamesIt) {
  const auto cfg = write_config("c.json", run_config({{"detection_noise", 2}}));
  EXPECT_EQ(cli({"run", "--config", cfg, "--out", path("o")}), 2);
  EXPECT_NE(err_.str().find("detection_noise"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(CliTest, RunWithoutTwistingGivesStandardQuantumLimit) {
  const auto cfg = write_config("c.json", {{"N", 50}, {"t1", 0.0}, {"measurement", "sz"},
                                           {"generator", {0, 1, 0}}});
  ASSERT_EQ(cli({"run", "--config", cfg, "--out", path("o")}), 0) << err_.str();
  const json s = read_json(dir_ / "o" / "run_summary.json");
  EXPECT_NEAR(s["qfi"].get<double>(), 50.0, 1e-9);
  EXPECT_NEAR(s["fc_analytic"].get<double>(), 50.0, 1e-4);
  EXPECT_TRUE(s["squeezing"].is_object());
}

TEST_F(CliTest, RunEchoSaturatesQfi) {
  const auto cfg = write_config("c.json", {{"N", 100}, {"t1", 0.027}, {"readout", "echo"}});
  ASSERT_EQ(cli({"run", "--config", cfg, "--out", path("o")}), 0) << err_.str();
  const json s = read_json(dir_ / "o" / "run_summary.json");
  const double qfi = s["qfi"];
  EXPECT_NEAR(s["fc_analytic"].get<double>(), qfi, 1e-3 * qfi);
  EXPECT_NEAR(s["fc_finite_difference"].get<double>(), qfi, 1e-3 * qfi);
  EXPECT_FALSE(s["near_parity_zero"].get<bool>());
  EXPECT_TRUE(fs::exists(dir_ / "o" / "run_probs.csv"));
}

TEST_F(CliTest, RunOptimizedBasisAndHusimi) {
  const auto cfg = write_config(
      "c.json", run_config({{"sigma", 2.0}, {"husimi", true}, {"q_grid", {{"n_theta", 10}, {"n_phi", 20}}}}));
  ASSERT_EQ(cli({"run", "--config", cfg, "--basis", "optimized", "--out", path("o"), "--format",
                 "json"}),
            0)
      << err_.str();
  const json s = read_json(dir_ / "o" / "run_summary.json");
  EXPECT_EQ(s["measurement"]["kind"], "optimized");
  EXPECT_TRUE(fs::exists(dir_ / "o" / "run_q.json"));
  EXPECT_TRUE(fs::exists(dir_ / "o" / "run_probs.json"));
}

TEST_F(CliTest, CertifyEchoWithSx) {
  const auto cfg = write_config("c.json", run_config());
  EXPECT_EQ(cli({"certify", "--config", cfg}), 0);
  EXPECT_NE(out_.str().find("certified"), std::string::npos);
  EXPECT_EQ(out_.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, CertifySzBasisFails) {
  const auto cfg = write_config("c.json", {{"N", 10}, {"t1", 0.05}, {"readout", "echo"},
                                           {"measurement", "sz"}});
  EXPECT_EQ(cli({"certify", "--config", cfg}), 1);
  EXPECT_NE(out_.str().find("not certified"), std::string::npos);
}

TEST_F(CliTest, CertifyRotationReadouts) {
  const auto about_x = write_config(
      "x.json", run_config({{"readout", "rotation"},
                            {"rotation", {{"axis", {1, 0, 0}}, {"angle", 0.7}}}}));
  EXPECT_EQ(cli({"certify", "--config", about_x}), 0) << out_.str();
  const auto about_y = write_config(
      "y.json", run_config({{"readout", "rotation"},
                            {"rotation", {{"axis", {0, 1, 0}}, {"angle", 0.7}}}}));
  EXPECT_EQ(cli({"certify", "--config", about_y}), 1);
  EXPECT_NE(out_.str().find("condition 3: readout conserves parity   FAIL"), std::string::npos)
      << out_.str();
  EXPECT_EQ(cli({"certify", "--config", about_x, "--basis", "optimized"}), 2);
}

TEST_F(CliTest, ManifestRoundTrip) {
  const auto cfg = write_config("c.json", run_config({{"sigma", 1.0}}));
  ASSERT_EQ(cli({"run", "--config", cfg, "--out", path("o")}), 0) << err_.str();
  const json m = read_json(dir_ / "o" / "manifest.json");
  EXPECT_EQ(m["tool"], "tntsim");
  EXPECT_EQ(m["command"], "run");
  for (const auto& f : m["files"]) EXPECT_TRUE(fs::exists(dir_ / "o" / f.get<std::string>()));
  RunConfig again;
  apply_json(again, m["config"]);
  EXPECT_EQ(config_hash(again), m["config_hash"].get<std::string>());
  const std::string csv = slurp(dir_ / "o" / "run_probs.csv");
  EXPECT_EQ(csv.rfind("# config_hash=" + m["config_hash"].get<std::string>() + "\n", 0), 0u);
}

TEST_F(CliTest, RerunsAreBitIdentical) {
  const json fig3 = {{"preset", "fig3"}, {"q_grid", {{"n_theta", 12}, {"n_phi", 24}}}};
  const auto cfg = write_config("c.json", fig3);
  ASSERT_EQ(cli({"fig", "fig3", "--config", cfg, "--out", path("a")}), 0) << err_.str();
  ASSERT_EQ(cli({"fig", "fig3", "--config", cfg, "--out", path("b"), "--threads", "1"}), 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
    const auto name = entry.path().filename();
    if (name == "manifest.json") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / name)) << name;
    ++compared;
  }
  EXPECT_EQ(compared, 9u);
  json ma = read_json(dir_ / "a" / "manifest.json");
  json mb = read_json(dir_ / "b" / "manifest.json");
  ma["config"].erase("out");
  mb["config"].erase("out");
  ma["config"].erase("threads");
  mb["config"].erase("threads");
  EXPECT_EQ(ma, mb);
}

TEST_F(CliTest, FailedRunRemovesPartialOutputs) {
  // A directory squatting on the second output name makes the write fail
  // after the first file is on disk.
  fs::create_directories(dir_ / "o" / "fig3_p_trivial_phi0.csv");
  const auto cfg = write_config("c.json", {{"preset", "fig3"}, {"q_grid", {{"n_theta", 6}, {"n_phi", 6}}}});
  EXPECT_EQ(cli({"fig", "fig3", "--config", cfg, "--out", path("o")}), 1);
  EXPECT_FALSE(fs::exists(dir_ / "o" / "fig3_q_trivial_phi0.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "o" / "manifest.json"));
  EXPECT_TRUE(fs::is_directory(dir_ / "o" / "fig3_p_trivial_phi0.csv"));
}

TEST_F(CliTest, Fig1SmallSystem) {
  const auto cfg = write_config("c.json", {{"preset", "fig1"},
                                           {"times", {{"start", 0}, {"stop", 0.1}, {"step", 0.01}}},
                                           {"q_grid", {{"n_theta", 8}, {"n_phi", 16}}}});
  ASSERT_EQ(cli({"fig", "fig1", "--N", "20", "--config", cfg, "--out", path("o")}), 0)
      << err_.str();
  const std::string csv = slurp(dir_ / "o" / "fig1_gain.csv");
  std::istringstream in(csv);
  std::string hash, header;
  std::getline(in, hash);
  std::getline(in, header);
  EXPECT_EQ(header, "chi_t,fq_tnt_n,fq_oat_n,gain_tnt,gain_oat,heisenberg_n");
  const json m = read_json(dir_ / "o" / "manifest.json");
  EXPECT_EQ(m["config"]["N"], 20);
  for (int i = 0; i < 4; ++i) {
    EXPECT_TRUE(fs::exists(dir_ / "o" / ("fig1_q_" + std::to_string(i) + ".csv")));
  }
}

TEST_F(CliTest, Fig4Schema) {
  const auto cfg = write_config("c.json", {{"preset", "fig4"},
                                           {"N", 20},
                                           {"t1_values", {0.1}},
                                           {"sigmas", {0, 1, 2}},
                                           {"asym_ratios", {1.0, 1.5}}});
  ASSERT_EQ(cli({"fig", "fig4", "--config", cfg, "--out", path("o")}), 0) << err_.str();
  std::istringstream in(slurp(dir_ / "o" / "fig4_t1_0.1.csv"));
  std::string hash, header, line;
  std::getline(in, hash);
  std::getline(in, header);
  EXPECT_EQ(header, "sigma,fc_trivial,fc_echo,fc_asym,fc_pseudo,qcrb,snl");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  const json t = read_json(dir_ / "o" / "fig4_thresholds.json");
  EXPECT_EQ(t["snl"], 20.0);
  EXPECT_TRUE(t["sigma_star"].contains("0.1"));
}

TEST_F(CliTest, PresetConflictIsConfigError) {
  const auto cfg = write_config("c.json", {{"preset", "fig2"}});
  EXPECT_EQ(cli({"fig", "fig3", "--config", cfg, "--out", path("o")}), 2);
}
