#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oamlink/modes.hpp"
#include "oamlink/source.hpp"

namespace oamlink {

/// Detection-side imperfections. Rates are in counts per second.
struct NoiseModel {
  /// Fraction of each detection projector leaking to the neighbouring OAM
  /// indices, split evenly between m - 1 and m + 1. Range [0, 0.5].
  double crosstalk_eps = 0.0;
  /// Flat accidental-coincidence floor, independent of the settings.
  double accidental_rate = 0.0;
  /// Coupling efficiency for eigenmode holograms, (0, 1].
  double eta_eigen = 1.0;
  /// Coupling efficiency for superposition holograms, (0, 1].
  double eta_super = 1.0;
  /// Peak coincidence rate scale R0.
  double rate_constant = 1.0;

  /// ErrorKind::Parameter naming the first field out of range.
  void validate() const;

  static NoiseModel ideal(double rate_constant = 1.0);
  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

/// One hologram setting on one arm.
struct Setting {
  ModeVector mode;
  std::string label;
  /// Sector angle when the hologram is a sector state.
  std::optional<double> theta;
};

Setting sector_setting(int l, double theta, int truncation = kDefaultTruncation);
Setting eigen_setting(OamIndex m, int truncation = kDefaultTruncation);

/// A coincidence measurement at one pair of settings.
///
/// `counts` holds the sampled (integral) value the analysis consumes;
/// `expected` keeps the Poisson mean it was drawn from.
struct CountRecord {
  int l = 0;
  Setting a;
  Setting b;
  double integration_time = 0.0;
  double counts = 0.0;
  double expected = 0.0;
};

/// Copy of the records with `counts` replaced by the noiseless expectation.
std::vector<CountRecord> with_expected_counts(std::span<const CountRecord> records);

using QuantumState = std::variant<JointOamState, TwoQubitState>;

/// Expected coincidence rate R0 * eta_a * eta_b * <D_a x D_b> + accidentals,
/// where D is the projector onto the setting blurred by nearest-neighbour
/// crosstalk. Projectors must be normalized (ErrorKind::InvalidProjector); for
/// a two-qubit state they must live in its {l, -l} subspace.
double coincidence_rate(const JointOamState& state, const ModeVector& proj_a,
                        const ModeVector& proj_b, const NoiseModel& noise);
double coincidence_rate(const TwoQubitState& state, const ModeVector& proj_a,
                        const ModeVector& proj_b, const NoiseModel& noise);
double coincidence_rate(const QuantumState& state, const ModeVector& proj_a,
                        const ModeVector& proj_b, const NoiseModel& noise);

/// R0 that puts `target_counts` expected counts at the brightest eigenmode
/// pair of the correlation matrix within the window [-m_max, m_max].
double calibrate_rate_constant(const JointOamState& state, NoiseModel noise, double integration_time,
                               double target_counts, int m_max = 5);

/// Signal-idler eigenmode count matrix over one index window shared by both
/// arms. Entries are stored row-major by (signal, idler).
struct CorrelationMatrix {
  int m_min = 0;
  int m_max = 0;
  OamIndex pump;
  double integration_time = 0.0;
  std::vector<double> expected;
  std::vector<double> sampled;

  int size() const { return m_max - m_min + 1; }
  double expected_at(int m_signal, int m_idler) const { return expected[offset(m_signal, m_idler)]; }
  double sampled_at(int m_signal, int m_idler) const { return sampled[offset(m_signal, m_idler)]; }
  std::size_t offset(int m_signal, int m_idler) const {
    return static_cast<std::size_t>(m_signal - m_min) * size() + (m_idler - m_min);
  }
};

CorrelationMatrix correlation_matrix(const JointOamState& state, int m_min, int m_max,
                                     const NoiseModel& noise, double integration_time,
                                     std::uint64_t seed);

/// Independent stream derived from (seed, index); splitmix64 finalizer over
/// seed + (index + 1) * golden-ratio increment.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index);

/// Poisson draw with mean rate * T from a generator seeded with `seed`.
std::int64_t sample_counts(double rate, double integration_time, std::uint64_t seed);
std::int64_t sample_poisson(double mean, std::mt19937_64& rng);

/// Evenly spaced angles covering one full fringe period [0, pi/l], both ends
/// included.
std::vector<double> default_fringe_grid(int l, int points = 16);

/// Sector-state scan of arm A against a fixed sector angle on arm B.
std::vector<CountRecord> fringe_scan(const QuantumState& state, int l, double theta_b,
                                     std::span<const double> theta_a_grid, const NoiseModel& noise,
                                     double integration_time, std::uint64_t seed);

/// The sixteen (theta_A, theta_B) hologram pairs feeding the four
/// correlation values of the CHSH sum: for each of (0, pi/8l), (0, 3pi/8l),
/// (pi/4l, pi/8l), (pi/4l, 3pi/8l) the pairs (a, b), (a + d, b + d),
/// (a + d, b), (a, b + d) with d = pi/2l, in that order.
std::array<std::array<double, 2>, 16> chsh_settings(int l);

std::vector<CountRecord> chsh_scan(const QuantumState& state, int l, const NoiseModel& noise,
                                   double integration_time, std::uint64_t seed);

// Serialization -----------------------------------------------------------

/// CSV with the idler indices as header row and the signal index leading
/// each row.
std::string correlation_csv(const CorrelationMatrix& matrix, bool sampled);
/// Columns m_signal, m_idler, expected, sampled along m_s + m_i = l_p.
std::string anti_diagonal_csv(const CorrelationMatrix& matrix);
/// One JSON object per line: {"l", "theta_a", "theta_b", "T", "counts"}.
std::string records_jsonl(std::span<const CountRecord> records);

}  // namespace oamlink
