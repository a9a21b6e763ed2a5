#pragma once

#include <map>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "oamlink/modes.hpp"

namespace oamlink {

using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;

/// Charge of the up-converted beam: OAM is additive through sum-frequency
/// generation.
constexpr OamIndex sfg_pump_oam(OamIndex classical_1550, OamIndex pump_795) {
  return classical_1550 + pump_795;
}

/// Pair-emission amplitudes c_m of the down-conversion source, keyed by the
/// signal charge m (the idler carries l_p - m).
///
/// The constructor normalizes the amplitudes and checks that both photons of
/// every stored pair fit inside the truncation window. Symmetry c_m = c_{-m}
/// is a property of the Gaussian family, not a constructor requirement, so
/// hand-built skewed spectra are representable.
class SpiralSpectrum {
 public:
  SpiralSpectrum(OamIndex pump, double sigma, std::map<int, Complex> amplitudes,
                 int truncation = kDefaultTruncation);

  OamIndex pump() const noexcept { return pump_; }
  double sigma() const noexcept { return sigma_; }
  int truncation() const noexcept { return truncation_; }
  const std::map<int, Complex>& amplitudes() const noexcept { return amplitudes_; }

  Complex amplitude(int m) const;
  double weight(int m) const { return std::norm(amplitude(m)); }

  /// Exact (bitwise) check of c_m == c_{-m}.
  bool is_symmetric() const;

  /// {"l_p": int, "sigma": float, "amplitudes": [{"m": int, "re": float, "im": float}]}
  std::string to_json() const;
  static SpiralSpectrum from_json(std::string_view text, int truncation = kDefaultTruncation);

 private:
  OamIndex pump_;
  double sigma_;
  int truncation_;
  std::map<int, Complex> amplitudes_;
};

/// |c_m|^2 proportional to exp(-(m - l_p/2)^2 / (2 sigma^2)), real non-negative
/// amplitudes, over every m with both m and l_p - m inside [-M, M].
SpiralSpectrum gaussian_spiral_spectrum(OamIndex pump, double sigma,
                                        int truncation = kDefaultTruncation);

/// Pure two-photon state sum_m c_m |m>_s |l_p - m>_i.
class JointOamState {
 public:
  static constexpr int kSignalWavelengthNm = 795;
  static constexpr int kIdlerWavelengthNm = 1550;

  explicit JointOamState(SpiralSpectrum spectrum);

  const SpiralSpectrum& spectrum() const noexcept { return spectrum_; }
  OamIndex pump() const noexcept { return spectrum_.pump(); }
  int truncation() const noexcept { return spectrum_.truncation(); }

  /// Zero off the conservation line m_signal + m_idler = l_p.
  Complex amplitude(int m_signal, int m_idler) const;
  double pair_probability(int m_signal, int m_idler) const {
    return std::norm(amplitude(m_signal, m_idler));
  }
  double total_probability() const;

 private:
  SpiralSpectrum spectrum_;
};

JointOamState build_joint_state(const SpiralSpectrum& spectrum);

/// Index helpers for the ordered basis {|l,l>, |l,-l>, |-l,l>, |-l,-l>}
/// (signal first). Side index 0 is |l>, 1 is |-l>.
constexpr int joint_index(int side_a, int side_b) { return 2 * side_a + side_b; }

/// (|l,-l> + |-l,l>)/sqrt(2) in the ordered basis above.
Vector4c entangled_target_vector();

/// Density matrix on the {|l>, |-l>} x {|l>, |-l>} subspace.
///
/// Construction checks Hermiticity (1e-12), unit trace (1e-12) and
/// positivity (smallest eigenvalue >= -1e-9) and stores the exactly
/// Hermitian part.
class TwoQubitState {
 public:
  TwoQubitState(int l, const Matrix4c& rho);

  static TwoQubitState from_pure(int l, const Vector4c& psi);
  /// The maximally entangled post-selected state |Phi>_l.
  static TwoQubitState entangled(int l);
  static TwoQubitState maximally_mixed(int l);

  int l() const noexcept { return l_; }
  const Matrix4c& rho() const noexcept { return rho_; }
  double min_eigenvalue() const;

 private:
  int l_;
  Matrix4c rho_;
};

/// Restricts the joint state to pairs with both charges in {l, -l} and
/// renormalizes. ErrorKind::EmptySubspace when nothing survives.
TwoQubitState post_select(const JointOamState& state, int l);

/// Werner mixing (1 - p) rho + p I/4.
TwoQubitState apply_white_noise(const TwoQubitState& state, double p);

}  // namespace oamlink
