#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oamlink/measurement.hpp"

namespace oamlink {

/// Least-squares fit of C(theta) = A cos^2[l (theta - phase)] + B.
struct FringeFit {
  int l = 1;
  double amplitude = 0.0;  // A >= 0
  double offset = 0.0;     // B >= 0
  double phase = 0.0;      // in [0, pi/l)
  /// (max - min)/(max + min) of the fitted curve, i.e. A/(A + 2B).
  double visibility = 0.0;
  /// Set when the data carry no fringe (constant counts); visibility is 0.
  bool degenerate = false;

  double evaluate(double theta) const;
};

/// Needs >= 6 records whose theta_a values span at least one period pi/l
/// (ErrorKind::InsufficientSpan otherwise).
FringeFit fit_fringe(std::span<const CountRecord> records, int l);

/// (c00 + c11 - c10 - c01) / (c00 + c11 + c10 + c01).
double correlation_E(double c00, double c11, double c10, double c01);

struct ChshResult {
  int l = 1;
  double S = 0.0;
  double std_error = 0.0;
  std::array<double, 4> E{};
  /// (theta_A, theta_B) for E(a,b), E(a,b'), E(a',b), E(a',b').
  std::array<std::array<double, 2>, 4> settings{};
  int resamples = 0;
};

struct ChshOptions {
  int resamples = 1000;
  std::uint64_t seed = 0x5eed;
};

/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b') at the canonical settings of
/// chsh_settings(l), located in `records` by angle modulo pi/l. The standard
/// error is the spread of S over Poisson resamples of all sixteen counts.
ChshResult chsh(std::span<const CountRecord> records, int l, const ChshOptions& options = {});

/// Full width at half maximum, in modes, of a sampled profile indexed by
/// consecutive integers. Crossings are linearly interpolated; a lone non-zero
/// sample has width 1.
double fwhm_modes(std::span<const double> weights);

/// FWHM of the expected anti-diagonal m_s + m_i = l_p after subtracting the
/// mean of all off-anti-diagonal entries.
double spiral_bandwidth(const CorrelationMatrix& matrix);

std::string to_json(const FringeFit& fit);
std::string to_json(const ChshResult& result);
/// Two columns theta, fitted_counts.
std::string fringe_curve_csv(const FringeFit& fit, int points = 181);

}  // namespace oamlink
