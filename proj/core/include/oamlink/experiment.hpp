#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "oamlink/analysis.hpp"
#include "oamlink/config.hpp"
#include "oamlink/measurement.hpp"
#include "oamlink/source.hpp"

namespace oamlink {

/// Seed streams per command, fed through split_seed(config.seed, stream).
enum class SeedStream : std::uint64_t {
  Correlation = 1,
  Fringes = 2,
  ChshCounts = 3,
  ChshBootstrap = 4,
  TomoCounts = 5,
  TomoBootstrap = 6,
};

std::uint64_t stream_seed(const ExperimentConfig& config, SeedStream stream);

/// Gaussian spiral spectrum pumped with the up-converted charge.
JointOamState source_state(const ExperimentConfig& config);

/// Post-selected {l, -l} state of the source with Werner mixing
/// `white_noise` on top.
TwoQubitState subspace_state(const ExperimentConfig& config);

/// Noise model for two-qubit runs: R0 scaled by the probability that the
/// source emits into the post-selected subspace, so the two-qubit counts sit
/// on the same brightness scale as the correlation matrix.
NoiseModel subspace_noise(const ExperimentConfig& config);

/// Correlation window [-5, 5], clipped to the truncation.
int correlation_window(const ExperimentConfig& config);

/// Each command creates config.output_dir if needed and returns the files it
/// wrote, in order.
std::vector<std::filesystem::path> cmd_correlation(const ExperimentConfig& config);
std::vector<std::filesystem::path> cmd_fringes(const ExperimentConfig& config);
std::vector<std::filesystem::path> cmd_chsh(const ExperimentConfig& config);
std::vector<std::filesystem::path> cmd_tomo(const ExperimentConfig& config);

struct HologramRequest {
  /// Sector state (l, theta) unless `oam` selects a pure eigenmode.
  std::optional<int> l;
  double theta = 0.0;
  std::optional<int> oam;
  int width = 512;
  int height = 512;
};

/// l defaults to config.subspace_l.
std::vector<std::filesystem::path> cmd_hologram(const ExperimentConfig& config, const HologramRequest& request);

/// Scatter of the fringe records with the fitted curves, one colour per
/// theta_B.
std::string fringe_svg(std::span<const CountRecord> records, int l, std::span<const double> theta_b,
                       std::span<const FringeFit> fits);

}  // namespace oamlink
