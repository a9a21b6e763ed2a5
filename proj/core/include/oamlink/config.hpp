#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "oamlink/measurement.hpp"
#include "oamlink/modes.hpp"

namespace oamlink {

/// Everything one CLI run needs.
///
/// Text form is flat `key = value` lines grouped under [source], [noise],
/// [measurement] and [run]. Unknown or repeated keys are errors; missing
/// keys keep their defaults.
struct ExperimentConfig {
  // [source]
  OamIndex classical_oam_1550{0};
  OamIndex pump_oam_795{0};
  double sigma = 2.12;
  int truncation = kDefaultTruncation;
  // [noise]
  NoiseModel noise;
  /// Werner mixing applied to the post-selected two-qubit state.
  double white_noise = 0.1064;
  // [measurement]
  int subspace_l = 1;
  double integration_time = 10.0;
  // [run]
  std::uint64_t seed = 20150101;
  std::string output_dir = "oamlink-out";

  OamIndex pump() const;

  /// ErrorKind::Config naming the first offending field.
  void validate() const;

  /// Defaults with rate_constant calibrated so the brightest correlation
  /// matrix entry expects 31475 counts in 10 s.
  static ExperimentConfig defaults();

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Starts from `defaults()`, overrides the keys present, validates.
ExperimentConfig parse_config(std::string_view text);
std::string serialize_config(const ExperimentConfig& config);
/// ErrorKind::Io when the file is unreadable, ErrorKind::Config when invalid.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Decimal unsigned 64-bit seed; ErrorKind::Config otherwise.
std::uint64_t parse_seed(std::string_view text);

}  // namespace oamlink
