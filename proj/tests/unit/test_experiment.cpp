#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oamlink/error.hpp"
#include "oamlink/experiment.hpp"
#include "oamlink/io.hpp"

using namespace oamlink;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("oamlink_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig config_in(const fs::path& dir) {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.output_dir = dir.string();
  return c;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text_file(p)); }

std::vector<std::string> names(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.filename().string());
  return out;
}

}  // namespace

TEST(CmdCorrelation, WritesFilesAndCalibratedPeak) {
  const auto dir = scratch("corr");
  const auto files = cmd_correlation(config_in(dir));
  EXPECT_EQ(names(files),
            (std::vector<std::string>{"expected.csv", "sampled.csv", "anti_diagonal.csv", "bandwidth.json"}));
  const auto bw = read_json(dir / "bandwidth.json");
  EXPECT_NEAR(bw.at("peak_expected").get<double>(), 31475.0, 1e-6);
  EXPECT_NEAR(bw.at("fwhm_modes").get<double>(), 5.0, 0.5);
  EXPECT_EQ(bw.at("l_p").get<int>(), 0);
  fs::remove_all(dir);
}

TEST(CmdCorrelation, ClassicalChargeMovesAntiDiagonal) {
  const auto dir = scratch("corr_m1");
  ExperimentConfig c = config_in(dir);
  c.classical_oam_1550 = OamIndex{-1};
  cmd_correlation(c);
  const std::string diag = read_text_file(dir / "anti_diagonal.csv");
  std::istringstream in(diag);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    int ms = 0, mi = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%d,%d", &ms, &mi), 2);
    EXPECT_EQ(ms + mi, -1);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(read_json(dir / "bandwidth.json").at("l_p").get<int>(), -1);
  fs::remove_all(dir);
}

TEST(CmdCorrelation, SameSeedSameBytes) {
  const auto a = scratch("corr_a");
  const auto b = scratch("corr_b");
  cmd_correlation(config_in(a));
  cmd_correlation(config_in(b));
  EXPECT_EQ(read_text_file(a / "sampled.csv"), read_text_file(b / "sampled.csv"));
  ExperimentConfig other = config_in(b);
  other.seed += 1;
  cmd_correlation(other);
  EXPECT_NE(read_text_file(a / "sampled.csv"), read_text_file(b / "sampled.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CmdFringes, DefaultVisibilityNearCalibration) {
  const auto dir = scratch("fringes");
  const auto files = cmd_fringes(config_in(dir));
  EXPECT_EQ(names(files), (std::vector<std::string>{"records.jsonl", "fit.json", "fringe.svg"}));
  const auto fit = read_json(dir / "fit.json");
  ASSERT_EQ(fit.at("fits").size(), 2u);
  EXPECT_NEAR(fit.at("fits")[0].at("visibility").get<double>(), 0.8936, 0.02);
  EXPECT_NEAR(fit.at("fits")[1].at("visibility").get<double>(), 0.8936, 0.02);
  const std::string svg = read_text_file(dir / "fringe.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CmdChsh, IdealNoiseAtMillionCountScale) {
  const auto dir = scratch("chsh");
  ExperimentConfig c = config_in(dir);
  c.noise = NoiseModel::ideal(1e6);
  c.white_noise = 0.0;
  c.integration_time = 10.0;
  cmd_chsh(c);
  const auto doc = read_json(dir / "chsh.json");
  EXPECT_NEAR(doc.at("S").get<double>(), 2 * std::sqrt(2.0), 0.01);
  EXPECT_GT(doc.at("stderr").get<double>(), 0.0);
  fs::remove_all(dir);
}

TEST(CmdTomo, NoiselessConfigFidelity) {
  const auto dir = scratch("tomo");
  ExperimentConfig c = config_in(dir);
  c.noise = NoiseModel::ideal(1e6);
  c.white_noise = 0.0;
  const auto files = cmd_tomo(c);
  for (const char* f : {"rho.json", "rho_real.csv", "rho_imag.csv", "fidelity.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto doc = read_json(dir / "fidelity.json");
  EXPECT_GE(doc.at("fidelity").get<double>(), 0.999);
  EXPECT_TRUE(doc.at("converged").get<bool>());
  fs::remove_all(dir);
}

TEST(CmdHologram, SectorAndEigenmode) {
  const auto dir = scratch("holo");
  const ExperimentConfig c = config_in(dir);
  HologramRequest sector;
  sector.l = 2;
  sector.theta = 0.0;
  sector.width = 64;
  sector.height = 32;
  const auto a = cmd_hologram(c, sector);
  ASSERT_EQ(a.size(), 1u);
  const std::string pgm = read_text_file(a[0]);
  EXPECT_EQ(pgm.rfind("P5\n64 32\n255\n", 0), 0u);
  HologramRequest eigen;
  eigen.oam = 3;
  const auto b = cmd_hologram(c, eigen);
  EXPECT_EQ(b[0].filename(), "hologram_m3.pgm");
  eigen.oam = 12;
  EXPECT_THROW(cmd_hologram(c, eigen), Error);
  fs::remove_all(dir);
}

TEST(Commands, UnwritableOutputIsIoError) {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.output_dir = "/proc/oamlink-cannot-exist";
  try {
    cmd_correlation(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find(c.output_dir), std::string::npos);
  }
}

TEST(SubspaceNoise, ScalesRateBySubspaceProbability) {
  const ExperimentConfig c = ExperimentConfig::defaults();
  const JointOamState j = source_state(c);
  const double kept = 2 * j.pair_probability(1, -1);
  EXPECT_NEAR(subspace_noise(c).rate_constant, c.noise.rate_constant * kept, 1e-9);
}
