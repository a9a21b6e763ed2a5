#include "oamlink/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oamlink/error.hpp"

namespace oamlink {

namespace {

constexpr double kProjectorTolerance = 1e-9;
constexpr double kSubspaceTolerance = 1e-12;
constexpr std::array<int, 3> kShifts = {0, -1, 1};

void require_normalized(const ModeVector& v, const char* arm) {
  const double n2 = v.norm_squared();
  if (std::abs(n2 - 1.0) > kProjectorTolerance) {
    throw Error(ErrorKind::InvalidProjector,
                fmt::format("projector on arm {} has squared norm {:.12g}", arm, n2));
  }
}

double shift_weight(int shift, double eps) { return shift == 0 ? 1.0 - eps : 0.5 * eps; }

double efficiency(const ModeVector& v, const NoiseModel& noise) {
  return v.is_eigenmode() ? noise.eta_eigen : noise.eta_super;
}

// Amplitude of the projector v displaced by `shift` units of OAM, read at m.
Complex shifted(const ModeVector& v, int shift, int m) { return v.amplitude(m - shift); }

// <D_a x D_b> for a joint state, D being the crosstalk-blurred projector.
double blurred_expectation(const JointOamState& state, const ModeVector& a, const ModeVector& b,
                           double eps) {
  const int lp = state.pump().value;
  double total = 0.0;
  for (int sa : kShifts) {
    const double wa = shift_weight(sa, eps);
    if (wa == 0.0) continue;
    for (int sb : kShifts) {
      const double wb = shift_weight(sb, eps);
      if (wb == 0.0) continue;
      Complex overlap{};
      for (const auto& [m, c] : state.spectrum().amplitudes()) {
        overlap += std::conj(shifted(a, sa, m)) * std::conj(shifted(b, sb, lp - m)) * c;
      }
      total += wa * wb * std::norm(overlap);
    }
  }
  return total;
}

double blurred_expectation(const TwoQubitState& state, const ModeVector& a, const ModeVector& b,
                           double eps) {
  const int l = state.l();
  const int charge[2] = {l, -l};
  double total = 0.0;
  for (int sa : kShifts) {
    const double wa = shift_weight(sa, eps);
    if (wa == 0.0) continue;
    for (int sb : kShifts) {
      const double wb = shift_weight(sb, eps);
      if (wb == 0.0) continue;
      Vector4c v;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          v(joint_index(i, j)) = shifted(a, sa, charge[i]) * shifted(b, sb, charge[j]);
        }
      }
      total += wa * wb * (v.adjoint() * state.rho() * v)(0, 0).real();
    }
  }
  return total;
}

void require_in_subspace(const ModeVector& v, int l, const char* arm) {
  double outside = 0.0;
  for (const auto& [m, amp] : v.amplitudes()) {
    if (m != l && m != -l) outside += std::norm(amp);
  }
  if (outside > kSubspaceTolerance) {
    throw Error(ErrorKind::InvalidProjector,
                fmt::format("projector on arm {} has weight {:.3e} outside the {{{}, -{}}} subspace",
                            arm, outside, l, l));
  }
}

}  // namespace

void NoiseModel::validate() const {
  auto fail = [](const char* field, double value, const char* range) {
    throw Error(ErrorKind::Parameter, fmt::format("noise.{} = {} outside {}", field, value, range));
  };
  if (!(crosstalk_eps >= 0.0 && crosstalk_eps <= 0.5)) fail("crosstalk_eps", crosstalk_eps, "[0, 0.5]");
  if (!(accidental_rate >= 0.0) || !std::isfinite(accidental_rate)) {
    fail("accidental_rate", accidental_rate, "[0, inf)");
  }
  if (!(eta_eigen > 0.0 && eta_eigen <= 1.0)) fail("eta_eigen", eta_eigen, "(0, 1]");
  if (!(eta_super > 0.0 && eta_super <= 1.0)) fail("eta_super", eta_super, "(0, 1]");
  if (!(rate_constant > 0.0) || !std::isfinite(rate_constant)) {
    fail("rate_constant", rate_constant, "(0, inf)");
  }
}

NoiseModel NoiseModel::ideal(double rate_constant) {
  NoiseModel noise;
  noise.rate_constant = rate_constant;
  return noise;
}

Setting sector_setting(int l, double theta, int truncation) {
  return Setting{sector_state(l, theta, truncation), "sector", theta};
}

Setting eigen_setting(OamIndex m, int truncation) {
  return Setting{ModeVector::eigenmode(m, truncation), fmt::format("m={}", m.value), std::nullopt};
}

std::vector<CountRecord> with_expected_counts(std::span<const CountRecord> records) {
  std::vector<CountRecord> out(records.begin(), records.end());
  for (auto& r : out) r.counts = r.expected;
  return out;
}

double coincidence_rate(const JointOamState& state, const ModeVector& proj_a,
                        const ModeVector& proj_b, const NoiseModel& noise) {
  noise.validate();
  require_normalized(proj_a, "A");
  require_normalized(proj_b, "B");
  const double joint = blurred_expectation(state, proj_a, proj_b, noise.crosstalk_eps);
  return noise.rate_constant * efficiency(proj_a, noise) * efficiency(proj_b, noise) * joint +
         noise.accidental_rate;
}

double coincidence_rate(const TwoQubitState& state, const ModeVector& proj_a,
                        const ModeVector& proj_b, const NoiseModel& noise) {
  noise.validate();
  require_normalized(proj_a, "A");
  require_normalized(proj_b, "B");
  require_in_subspace(proj_a, state.l(), "A");
  require_in_subspace(proj_b, state.l(), "B");
  const double joint = std::max(0.0, blurred_expectation(state, proj_a, proj_b, noise.crosstalk_eps));
  return noise.rate_constant * efficiency(proj_a, noise) * efficiency(proj_b, noise) * joint +
         noise.accidental_rate;
}

double coincidence_rate(const QuantumState& state, const ModeVector& proj_a,
                        const ModeVector& proj_b, const NoiseModel& noise) {
  return std::visit([&](const auto& s) { return coincidence_rate(s, proj_a, proj_b, noise); }, state);
}

double calibrate_rate_constant(const JointOamState& state, NoiseModel noise, double integration_time,
                               double target_counts, int m_max) {
  if (!(integration_time > 0.0)) throw Error(ErrorKind::Parameter, "integration time must be > 0");
  const double accidentals = noise.accidental_rate;
  noise.rate_constant = 1.0;
  noise.accidental_rate = 0.0;
  double brightest = 0.0;
  for (int ms = -m_max; ms <= m_max; ++ms) {
    for (int mi = -m_max; mi <= m_max; ++mi) {
      brightest = std::max(brightest,
                           coincidence_rate(state, ModeVector::eigenmode(OamIndex{ms}, state.truncation()),
                                            ModeVector::eigenmode(OamIndex{mi}, state.truncation()), noise));
    }
  }
  const double signal_rate = target_counts / integration_time - accidentals;
  if (!(brightest > 0.0) || !(signal_rate > 0.0)) {
    throw Error(ErrorKind::Parameter,
                fmt::format("cannot reach {} peak counts above the accidental floor", target_counts));
  }
  return signal_rate / brightest;
}

CorrelationMatrix correlation_matrix(const JointOamState& state, int m_min, int m_max,
                                     const NoiseModel& noise, double integration_time,
                                     std::uint64_t seed) {
  if (m_min > m_max) throw Error(ErrorKind::Parameter, "empty OAM window");
  OamIndex::checked(m_min, state.truncation());
  OamIndex::checked(m_max, state.truncation());
  if (!(integration_time > 0.0)) throw Error(ErrorKind::Parameter, "integration time must be > 0");

  CorrelationMatrix out;
  out.m_min = m_min;
  out.m_max = m_max;
  out.pump = state.pump();
  out.integration_time = integration_time;
  const auto n = static_cast<std::size_t>(out.size());
  out.expected.resize(n * n);
  out.sampled.resize(n * n);
  for (int ms = m_min; ms <= m_max; ++ms) {
    const ModeVector pa = ModeVector::eigenmode(OamIndex{ms}, state.truncation());
    for (int mi = m_min; mi <= m_max; ++mi) {
      const ModeVector pb = ModeVector::eigenmode(OamIndex{mi}, state.truncation());
      const std::size_t k = out.offset(ms, mi);
      const double rate = coincidence_rate(state, pa, pb, noise);
      out.expected[k] = rate * integration_time;
      out.sampled[k] = static_cast<double>(sample_counts(rate, integration_time, split_seed(seed, k)));
    }
  }
  return out;
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::int64_t sample_poisson(double mean, std::mt19937_64& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw Error(ErrorKind::Parameter, fmt::format("Poisson mean {} must be finite and >= 0", mean));
  }
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::int64_t> draw(mean);
  return draw(rng);
}

std::int64_t sample_counts(double rate, double integration_time, std::uint64_t seed) {
  if (!(rate >= 0.0)) throw Error(ErrorKind::Parameter, fmt::format("negative rate {}", rate));
  if (!(integration_time > 0.0)) throw Error(ErrorKind::Parameter, "integration time must be > 0");
  std::mt19937_64 rng(seed);
  return sample_poisson(rate * integration_time, rng);
}

std::vector<double> default_fringe_grid(int l, int points) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("fringe grid needs l >= 1, got {}", l));
  if (points < 2) throw Error(ErrorKind::Parameter, "fringe grid needs at least two points");
  const double period = std::numbers::pi / l;
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) grid[k] = period * k / (points - 1);
  return grid;
}

std::vector<CountRecord> fringe_scan(const QuantumState& state, int l, double theta_b,
                                     std::span<const double> theta_a_grid, const NoiseModel& noise,
                                     double integration_time, std::uint64_t seed) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("fringe scan needs l >= 1, got {}", l));
  const int truncation = std::visit(
      [](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, JointOamState>) {
          return s.truncation();
        } else {
          return std::max(kDefaultTruncation, s.l());
        }
      },
      state);
  const double period = std::numbers::pi / l;
  const Setting sb = sector_setting(l, theta_b, truncation);
  std::vector<CountRecord> out;
  out.reserve(theta_a_grid.size());
  for (std::size_t i = 0; i < theta_a_grid.size(); ++i) {
    const double ta = theta_a_grid[i];
    if (ta < -1e-12 || ta > period + 1e-12) {
      throw Error(ErrorKind::Parameter,
                  fmt::format("fringe angle {} outside one period [0, {}]", ta, period));
    }
    CountRecord r;
    r.l = l;
    r.a = sector_setting(l, ta, truncation);
    r.b = sb;
    r.integration_time = integration_time;
    const double rate = coincidence_rate(state, r.a.mode, r.b.mode, noise);
    r.expected = rate * integration_time;
    r.counts = static_cast<double>(sample_counts(rate, integration_time, split_seed(seed, i)));
    out.push_back(std::move(r));
  }
  return out;
}

std::array<std::array<double, 2>, 16> chsh_settings(int l) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("CHSH needs l >= 1, got {}", l));
  const double pi = std::numbers::pi;
  const double d = pi / (2.0 * l);
  const std::array<std::array<double, 2>, 4> pairs = {{
      {0.0, pi / (8.0 * l)},
      {0.0, 3.0 * pi / (8.0 * l)},
      {pi / (4.0 * l), pi / (8.0 * l)},
      {pi / (4.0 * l), 3.0 * pi / (8.0 * l)},
  }};
  std::array<std::array<double, 2>, 16> out{};
  for (std::size_t k = 0; k < 4; ++k) {
    const double a = pairs[k][0];
    const double b = pairs[k][1];
    out[4 * k + 0] = {a, b};
    out[4 * k + 1] = {a + d, b + d};
    out[4 * k + 2] = {a + d, b};
    out[4 * k + 3] = {a, b + d};
  }
  return out;
}

std::vector<CountRecord> chsh_scan(const QuantumState& state, int l, const NoiseModel& noise,
                                   double integration_time, std::uint64_t seed) {
  const auto settings = chsh_settings(l);
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const double grid[1] = {settings[i][0]};
    auto rec = fringe_scan(state, l, settings[i][1], grid, noise, integration_time, split_seed(seed, i));
    out.push_back(std::move(rec.front()));
  }
  return out;
}

std::string correlation_csv(const CorrelationMatrix& matrix, bool sampled) {
  std::string out = "m_s\\m_i";
  for (int mi = matrix.m_min; mi <= matrix.m_max; ++mi) out += fmt::format(",{}", mi);
  out += "\n";
  for (int ms = matrix.m_min; ms <= matrix.m_max; ++ms) {
    out += fmt::format("{}", ms);
    for (int mi = matrix.m_min; mi <= matrix.m_max; ++mi) {
      const double v = sampled ? matrix.sampled_at(ms, mi) : matrix.expected_at(ms, mi);
      out += sampled ? fmt::format(",{:.0f}", v) : fmt::format(",{:.17g}", v);
    }
    out += "\n";
  }
  return out;
}

std::string anti_diagonal_csv(const CorrelationMatrix& matrix) {
  std::string out = "m_s,m_i,expected,sampled\n";
  for (int ms = matrix.m_min; ms <= matrix.m_max; ++ms) {
    const int mi = matrix.pump.value - ms;
    if (mi < matrix.m_min || mi > matrix.m_max) continue;
    out += fmt::format("{},{},{:.17g},{:.0f}\n", ms, mi, matrix.expected_at(ms, mi),
                       matrix.sampled_at(ms, mi));
  }
  return out;
}

std::string records_jsonl(std::span<const CountRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json line;
    line["l"] = r.l;
    line["theta_a"] = r.a.theta ? nlohmann::ordered_json(*r.a.theta) : nlohmann::ordered_json();
    line["theta_b"] = r.b.theta ? nlohmann::ordered_json(*r.b.theta) : nlohmann::ordered_json();
    line["T"] = r.integration_time;
    line["counts"] = static_cast<std::int64_t>(std::llround(r.counts));
    if (!r.a.theta || !r.b.theta) {
      line["setting_a"] = r.a.label;
      line["setting_b"] = r.b.label;
    }
    out += line.dump();
    out += "\n";
  }
  return out;
}

}  // namespace oamlink
