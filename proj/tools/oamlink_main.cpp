// oamlink: run one stage of the simulated OAM entanglement experiment.
//
//   oamlink <correlation|fringes|chsh|tomo|hologram> --config <path> [--seed N] [--out DIR]
//
// Exit status: 0 ok, 1 other failure, 2 config/usage error, 3 I/O error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oamlink/config.hpp"
#include "oamlink/error.hpp"
#include "oamlink/experiment.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Common {
  std::string config_path;
  std::optional<std::string> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "experiment config file")->required();
  cmd->add_option("--seed", common.seed, "64-bit seed, overrides config and OAMLINK_SEED");
  cmd->add_option("--out", common.out, "output directory, overrides run.output_dir");
}

oamlink::ExperimentConfig resolve(const Common& common) {
  oamlink::ExperimentConfig config = oamlink::load_config(common.config_path);
  if (const char* env = std::getenv("OAMLINK_SEED"); env && *env) {
    config.seed = oamlink::parse_seed(env);
  }
  if (common.seed) config.seed = oamlink::parse_seed(*common.seed);
  if (common.out) config.output_dir = *common.out;
  config.validate();
  return config;
}

int exit_code(oamlink::ErrorKind kind) {
  switch (kind) {
    case oamlink::ErrorKind::Config: return kExitConfig;
    case oamlink::ErrorKind::Io: return kExitIo;
    default: return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated OAM entanglement experiment driver"};
  app.require_subcommand(1);

  Common common;
  oamlink::HologramRequest hologram;
  std::optional<int> hologram_l;
  std::optional<int> hologram_oam;

  auto* correlation = app.add_subcommand("correlation", "signal/idler OAM correlation matrix and spiral bandwidth");
  auto* fringes = app.add_subcommand("fringes", "sector-state coincidence fringes and visibility fits");
  auto* chsh = app.add_subcommand("chsh", "CHSH parameter with bootstrap error");
  auto* tomo = app.add_subcommand("tomo", "16-setting tomography, maximum-likelihood density matrix");
  auto* holo = app.add_subcommand("hologram", "phase-only hologram as 8-bit PGM");
  for (auto* cmd : {correlation, fringes, chsh, tomo, holo}) add_common(cmd, common);
  holo->add_option("--l", hologram_l, "sector state charge (default measurement.subspace_l)")
      ->check(CLI::PositiveNumber);
  holo->add_option("--theta", hologram.theta, "sector rotation angle, radians");
  holo->add_option("--oam", hologram_oam, "render the pure eigenmode m instead of a sector state");
  holo->add_option("--width", hologram.width, "pixels")->check(CLI::Range(16, 8192));
  holo->add_option("--height", hologram.height, "pixels")->check(CLI::Range(16, 8192));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const oamlink::ExperimentConfig config = resolve(common);
    std::vector<std::filesystem::path> written;
    if (*correlation) {
      written = oamlink::cmd_correlation(config);
    } else if (*fringes) {
      written = oamlink::cmd_fringes(config);
    } else if (*chsh) {
      written = oamlink::cmd_chsh(config);
    } else if (*tomo) {
      written = oamlink::cmd_tomo(config);
    } else {
      hologram.l = hologram_l;
      hologram.oam = hologram_oam;
      written = oamlink::cmd_hologram(config, hologram);
    }
    for (const auto& path : written) std::cout << path.string() << "\n";
    return 0;
  } catch (const oamlink::Error& e) {
    std::cerr << "oamlink: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "oamlink: " << e.what() << "\n";
    return kExitFailure;
  }
}
