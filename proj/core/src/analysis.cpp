#include "oamlink/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oamlink/error.hpp"

namespace oamlink {

namespace {

constexpr double kAngleTolerance = 1e-9;

double reduce_angle(double theta, double period) {
  double r = std::fmod(theta, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

// Signed distance between two angles modulo `period`, in (-period/2, period/2].
double angle_distance(double a, double b, double period) {
  double d = reduce_angle(a - b, period);
  if (d > 0.5 * period) d -= period;
  return d;
}

double residual_with_zero_offset(const std::vector<double>& theta, const std::vector<double>& y, int l,
                                 double phase, double* amplitude) {
  double gy = 0.0;
  double gg = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double c = std::cos(l * (theta[i] - phase));
    const double g = c * c;
    gy += g * y[i];
    gg += g * g;
  }
  const double a = gg > 0.0 ? std::max(0.0, gy / gg) : 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double c = std::cos(l * (theta[i] - phase));
    const double r = y[i] - a * c * c;
    ss += r * r;
  }
  if (amplitude) *amplitude = a;
  return ss;
}

}  // namespace

double FringeFit::evaluate(double theta) const {
  const double c = std::cos(l * (theta - phase));
  return amplitude * c * c + offset;
}

FringeFit fit_fringe(std::span<const CountRecord> records, int l) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("fringe fit needs l >= 1, got {}", l));
  if (records.size() < 6) {
    throw Error(ErrorKind::InsufficientSpan,
                fmt::format("fringe fit needs at least 6 records, got {}", records.size()));
  }
  std::vector<double> theta;
  std::vector<double> y;
  for (const auto& r : records) {
    if (!r.a.theta) throw Error(ErrorKind::Parameter, "fringe record without a sector angle on arm A");
    theta.push_back(*r.a.theta);
    y.push_back(r.counts);
  }
  const double period = std::numbers::pi / l;
  const auto [tmin, tmax] = std::minmax_element(theta.begin(), theta.end());
  if (*tmax - *tmin < period - kAngleTolerance) {
    throw Error(ErrorKind::InsufficientSpan,
                fmt::format("angles span {:.6g} rad, less than one period {:.6g}", *tmax - *tmin, period));
  }

  FringeFit fit;
  fit.l = l;
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymax - *ymin <= 1e-12 * std::max(1.0, std::abs(*ymax))) {
    fit.offset = *ymin;
    fit.degenerate = true;
    return fit;
  }

  // A cos^2[l(t - p)] + B = (A/2 + B) + (A/2) cos(2l p) cos(2l t) + (A/2) sin(2l p) sin(2l t)
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(2.0 * l * theta[i]);
    design(i, 2) = std::sin(2.0 * l * theta[i]);
    rhs(i) = y[i];
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);
  const double half_amplitude = std::hypot(coef(1), coef(2));
  fit.amplitude = 2.0 * half_amplitude;
  fit.phase = reduce_angle(std::atan2(coef(2), coef(1)) / (2.0 * l), period);
  fit.offset = coef(0) - half_amplitude;

  if (fit.offset < 0.0) {
    // Offset pinned at zero: scan the phase, then refine by golden section.
    fit.offset = 0.0;
    const int steps = 720;
    double best_phase = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < steps; ++k) {
      const double p = period * k / steps;
      const double ss = residual_with_zero_offset(theta, y, l, p, nullptr);
      if (ss < best) {
        best = ss;
        best_phase = p;
      }
    }
    double lo = best_phase - period / steps;
    double hi = best_phase + period / steps;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
      const double x1 = hi - g * (hi - lo);
      const double x2 = lo + g * (hi - lo);
      if (residual_with_zero_offset(theta, y, l, x1, nullptr) <
          residual_with_zero_offset(theta, y, l, x2, nullptr)) {
        hi = x2;
      } else {
        lo = x1;
      }
    }
    fit.phase = reduce_angle(0.5 * (lo + hi), period);
    residual_with_zero_offset(theta, y, l, fit.phase, &fit.amplitude);
  }

  const double denom = fit.amplitude + 2.0 * fit.offset;
  fit.visibility = denom > 0.0 ? std::clamp(fit.amplitude / denom, 0.0, 1.0) : 0.0;
  return fit;
}

double correlation_E(double c00, double c11, double c10, double c01) {
  if (c00 < 0.0 || c11 < 0.0 || c10 < 0.0 || c01 < 0.0) {
    throw Error(ErrorKind::Parameter, "negative coincidence count");
  }
  const double total = c00 + c11 + c10 + c01;
  if (!(total > 0.0)) throw Error(ErrorKind::UndefinedCorrelation, "all four counts are zero");
  return (c00 + c11 - c10 - c01) / total;
}

namespace {

double chsh_sum(const std::array<double, 16>& c) {
  std::array<double, 4> e{};
  for (std::size_t k = 0; k < 4; ++k) {
    e[k] = correlation_E(c[4 * k], c[4 * k + 1], c[4 * k + 2], c[4 * k + 3]);
  }
  return e[0] - e[1] + e[2] + e[3];
}

}  // namespace

ChshResult chsh(std::span<const CountRecord> records, int l, const ChshOptions& options) {
  const auto settings = chsh_settings(l);
  const double period = std::numbers::pi / l;
  std::array<double, 16> counts{};
  for (std::size_t k = 0; k < settings.size(); ++k) {
    std::optional<double> found;
    for (const auto& r : records) {
      if (!r.a.theta || !r.b.theta || r.l != l) continue;
      if (std::abs(angle_distance(*r.a.theta, settings[k][0], period)) < kAngleTolerance &&
          std::abs(angle_distance(*r.b.theta, settings[k][1], period)) < kAngleTolerance) {
        found = r.counts;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorKind::IncompleteSettings,
                  fmt::format("no record at theta_A = {:.6g}, theta_B = {:.6g}", settings[k][0],
                              settings[k][1]));
    }
    counts[k] = *found;
  }

  ChshResult result;
  result.l = l;
  for (std::size_t k = 0; k < 4; ++k) {
    result.E[k] = correlation_E(counts[4 * k], counts[4 * k + 1], counts[4 * k + 2], counts[4 * k + 3]);
    result.settings[k] = settings[4 * k];
  }
  result.S = result.E[0] - result.E[1] + result.E[2] + result.E[3];

  if (options.resamples > 1) {
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(options.resamples));
    for (int r = 0; r < options.resamples; ++r) {
      std::mt19937_64 rng(split_seed(options.seed, static_cast<std::uint64_t>(r)));
      std::array<double, 16> resampled{};
      for (std::size_t k = 0; k < 16; ++k) {
        resampled[k] = static_cast<double>(sample_poisson(counts[k], rng));
      }
      try {
        samples.push_back(chsh_sum(resampled));
      } catch (const Error&) {
        // A resample with an empty quadruple has no defined S; drop it.
      }
    }
    if (samples.size() > 1) {
      double mean = 0.0;
      for (double s : samples) mean += s;
      mean /= static_cast<double>(samples.size());
      double ss = 0.0;
      for (double s : samples) ss += (s - mean) * (s - mean);
      result.std_error = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    }
    result.resamples = static_cast<int>(samples.size());
  }
  return result;
}

double fwhm_modes(std::span<const double> weights) {
  if (weights.empty()) throw Error(ErrorKind::EmptyDiagonal, "no samples");
  // Pad with zeros so an edge peak still has a crossing on each side.
  std::vector<double> w;
  w.reserve(weights.size() + 2);
  w.push_back(0.0);
  w.insert(w.end(), weights.begin(), weights.end());
  w.push_back(0.0);
  const auto peak_it = std::max_element(w.begin(), w.end());
  const double peak = *peak_it;
  if (!(peak > 0.0)) throw Error(ErrorKind::EmptyDiagonal, "profile has no positive weight");
  const double half = 0.5 * peak;
  const auto k = static_cast<std::size_t>(peak_it - w.begin());

  std::size_t i = k;
  while (w[i - 1] > half) --i;
  // crossing between i-1 (<= half) and i (> half)
  const double left = (i - 1) + (half - w[i - 1]) / (w[i] - w[i - 1]);
  std::size_t j = k;
  while (w[j + 1] > half) ++j;
  const double right = j + (w[j] - half) / (w[j] - w[j + 1]);
  return right - left;
}

double spiral_bandwidth(const CorrelationMatrix& matrix) {
  double background = 0.0;
  int off = 0;
  std::vector<double> diagonal;
  for (int ms = matrix.m_min; ms <= matrix.m_max; ++ms) {
    for (int mi = matrix.m_min; mi <= matrix.m_max; ++mi) {
      if (ms + mi == matrix.pump.value) {
        diagonal.push_back(matrix.expected_at(ms, mi));
      } else {
        background += matrix.expected_at(ms, mi);
        ++off;
      }
    }
  }
  if (diagonal.empty() || std::all_of(diagonal.begin(), diagonal.end(), [](double v) { return v == 0.0; })) {
    throw Error(ErrorKind::EmptyDiagonal,
                fmt::format("no counts on the m_s + m_i = {} anti-diagonal", matrix.pump.value));
  }
  if (off > 0) background /= off;
  for (double& v : diagonal) v -= background;
  return fwhm_modes(diagonal);
}

std::string to_json(const FringeFit& fit) {
  nlohmann::ordered_json doc;
  doc["l"] = fit.l;
  doc["amplitude"] = fit.amplitude;
  doc["offset"] = fit.offset;
  doc["phase"] = fit.phase;
  doc["visibility"] = fit.visibility;
  doc["degenerate"] = fit.degenerate;
  return doc.dump(2) + "\n";
}

std::string to_json(const ChshResult& result) {
  nlohmann::ordered_json doc;
  doc["l"] = result.l;
  doc["S"] = result.S;
  doc["stderr"] = result.std_error;
  doc["E"] = result.E;
  doc["settings"] = result.settings;
  doc["resamples"] = result.resamples;
  return doc.dump(2) + "\n";
}

std::string fringe_curve_csv(const FringeFit& fit, int points) {
  std::string out = "theta,fitted_counts\n";
  const double period = std::numbers::pi / fit.l;
  for (int k = 0; k < points; ++k) {
    const double t = period * k / (points - 1);
    out += fmt::format("{:.17g},{:.17g}\n", t, fit.evaluate(t));
  }
  return out;
}

}  // namespace oamlink
