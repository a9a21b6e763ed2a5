#include "oamlink/source.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oamlink/error.hpp"

namespace oamlink {

namespace {

constexpr double kTraceTolerance = 1e-12;
constexpr double kHermitianTolerance = 1e-12;
constexpr double kPositivityTolerance = 1e-9;

}  // namespace

SpiralSpectrum::SpiralSpectrum(OamIndex pump, double sigma, std::map<int, Complex> amplitudes,
                               int truncation)
    : pump_(pump), sigma_(sigma), truncation_(truncation) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::Parameter, fmt::format("spectrum width sigma must be > 0, got {}", sigma));
  }
  OamIndex::checked(pump.value, truncation);
  double total = 0.0;
  for (const auto& [m, c] : amplitudes) {
    OamIndex::checked(m, truncation);
    OamIndex::checked(pump.value - m, truncation);
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw Error(ErrorKind::Parameter, fmt::format("non-finite spectrum amplitude at m = {}", m));
    }
    total += std::norm(c);
  }
  if (!(total > 0.0)) throw Error(ErrorKind::Parameter, "spiral spectrum has no weight");
  const double scale = 1.0 / std::sqrt(total);
  for (auto& [m, c] : amplitudes) amplitudes_.emplace(m, c * scale);
}

Complex SpiralSpectrum::amplitude(int m) const {
  auto it = amplitudes_.find(m);
  return it == amplitudes_.end() ? Complex{} : it->second;
}

bool SpiralSpectrum::is_symmetric() const {
  for (const auto& [m, c] : amplitudes_) {
    if (amplitude(-m) != c) return false;
  }
  return true;
}

std::string SpiralSpectrum::to_json() const {
  nlohmann::json amps = nlohmann::json::array();
  for (const auto& [m, c] : amplitudes_) {
    amps.push_back({{"m", m}, {"re", c.real()}, {"im", c.imag()}});
  }
  nlohmann::json doc = {{"l_p", pump_.value}, {"sigma", sigma_}, {"amplitudes", amps}};
  return doc.dump(2) + "\n";
}

SpiralSpectrum SpiralSpectrum::from_json(std::string_view text, int truncation) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::map<int, Complex> amps;
    for (const auto& entry : doc.at("amplitudes")) {
      const int m = entry.at("m").get<int>();
      if (!amps.emplace(m, Complex{entry.at("re").get<double>(), entry.at("im").get<double>()})
               .second) {
        throw Error(ErrorKind::Parameter, fmt::format("duplicate spectrum entry m = {}", m));
      }
    }
    return SpiralSpectrum(OamIndex{doc.at("l_p").get<int>()}, doc.at("sigma").get<double>(),
                          std::move(amps), truncation);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parameter, std::string("malformed spectrum JSON: ") + e.what());
  }
}

SpiralSpectrum gaussian_spiral_spectrum(OamIndex pump, double sigma, int truncation) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::Parameter, fmt::format("spectrum width sigma must be > 0, got {}", sigma));
  }
  if (truncation < std::abs(pump.value)) {
    throw Error(ErrorKind::InvalidMode,
                fmt::format("truncation {} cannot hold pump charge {}", truncation, pump.value));
  }
  const int lo = std::max(-truncation, pump.value - truncation);
  const int hi = std::min(truncation, pump.value + truncation);
  const double centre = 0.5 * pump.value;

  // Work with log-weights so very narrow spectra keep their peak instead of
  // underflowing to an all-zero vector.
  std::vector<double> log_weight;
  double peak = -std::numeric_limits<double>::infinity();
  for (int m = lo; m <= hi; ++m) {
    const double d = m - centre;
    log_weight.push_back(-d * d / (2.0 * sigma * sigma));
    peak = std::max(peak, log_weight.back());
  }
  std::map<int, Complex> amps;
  for (int m = lo; m <= hi; ++m) {
    // amplitude = sqrt(weight)
    amps.emplace(m, Complex{std::exp(0.5 * (log_weight[m - lo] - peak)), 0.0});
  }
  return SpiralSpectrum(pump, sigma, std::move(amps), truncation);
}

JointOamState::JointOamState(SpiralSpectrum spectrum) : spectrum_(std::move(spectrum)) {}

Complex JointOamState::amplitude(int m_signal, int m_idler) const {
  if (m_signal + m_idler != pump().value) return Complex{};
  return spectrum_.amplitude(m_signal);
}

double JointOamState::total_probability() const {
  double total = 0.0;
  for (const auto& [m, c] : spectrum_.amplitudes()) total += std::norm(c);
  return total;
}

JointOamState build_joint_state(const SpiralSpectrum& spectrum) { return JointOamState(spectrum); }

Vector4c entangled_target_vector() {
  Vector4c v = Vector4c::Zero();
  v(joint_index(0, 1)) = 1.0 / std::numbers::sqrt2;
  v(joint_index(1, 0)) = 1.0 / std::numbers::sqrt2;
  return v;
}

TwoQubitState::TwoQubitState(int l, const Matrix4c& rho) : l_(l), rho_(rho) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("subspace needs l >= 1, got {}", l));
  if (!rho.allFinite()) throw Error(ErrorKind::Parameter, "density matrix has non-finite entries");
  const double asym = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTolerance) {
    throw Error(ErrorKind::Parameter, fmt::format("density matrix not Hermitian (|rho - rho^+| = {:.3e})", asym));
  }
  rho_ = 0.5 * (rho + rho.adjoint());
  const double trace = rho_.trace().real();
  if (std::abs(trace - 1.0) > kTraceTolerance) {
    throw Error(ErrorKind::Parameter, fmt::format("density matrix trace {:.15g} != 1", trace));
  }
  const double lowest = min_eigenvalue();
  if (lowest < -kPositivityTolerance) {
    throw Error(ErrorKind::Parameter,
                fmt::format("density matrix not positive (min eigenvalue {:.3e})", lowest));
  }
}

TwoQubitState TwoQubitState::from_pure(int l, const Vector4c& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw Error(ErrorKind::Parameter, "zero state vector");
  const Vector4c unit = psi / n;
  return TwoQubitState(l, unit * unit.adjoint());
}

TwoQubitState TwoQubitState::entangled(int l) { return from_pure(l, entangled_target_vector()); }

TwoQubitState TwoQubitState::maximally_mixed(int l) {
  return TwoQubitState(l, Matrix4c::Identity() * 0.25);
}

double TwoQubitState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(rho_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

TwoQubitState post_select(const JointOamState& state, int l) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("subspace needs l >= 1, got {}", l));
  const int side_charge[2] = {l, -l};
  Vector4c psi = Vector4c::Zero();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      psi(joint_index(a, b)) = state.amplitude(side_charge[a], side_charge[b]);
    }
  }
  if (psi.squaredNorm() == 0.0) {
    throw Error(ErrorKind::EmptySubspace,
                fmt::format("no pair amplitude in the {{{0}, -{0}}} subspace for pump charge {1}", l,
                            state.pump().value));
  }
  return TwoQubitState::from_pure(l, psi);
}

TwoQubitState apply_white_noise(const TwoQubitState& state, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::Parameter, fmt::format("white-noise fraction {} outside [0, 1]", p));
  }
  const Matrix4c mixed = (1.0 - p) * state.rho() + (p * 0.25) * Matrix4c::Identity();
  return TwoQubitState(state.l(), mixed);
}

}  // namespace oamlink
