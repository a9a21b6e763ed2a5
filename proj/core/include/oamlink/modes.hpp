#pragma once

#include <complex>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace oamlink {

using Complex = std::complex<double>;

inline constexpr int kDefaultTruncation = 10;

/// Topological charge of a helically phased mode.
struct OamIndex {
  int value = 0;

  constexpr OamIndex() = default;
  constexpr explicit OamIndex(int v) : value(v) {}

  /// Throws ErrorKind::InvalidMode when |v| exceeds the truncation.
  static OamIndex checked(int v, int truncation = kDefaultTruncation);

  friend constexpr bool operator==(OamIndex, OamIndex) = default;
  friend constexpr auto operator<=>(OamIndex, OamIndex) = default;
  friend constexpr OamIndex operator+(OamIndex a, OamIndex b) { return OamIndex{a.value + b.value}; }
  friend constexpr OamIndex operator-(OamIndex a, OamIndex b) { return OamIndex{a.value - b.value}; }
  friend constexpr OamIndex operator-(OamIndex a) { return OamIndex{-a.value}; }
};

/// Superposition of OAM eigenmodes, stored sparsely by index.
///
/// Construction validates that every index lies inside the truncation
/// window but does not normalize; call normalized() for that. Values are
/// immutable once built.
class ModeVector {
 public:
  ModeVector() = default;
  explicit ModeVector(std::map<int, Complex> amplitudes, int truncation = kDefaultTruncation);

  static ModeVector eigenmode(OamIndex m, int truncation = kDefaultTruncation);

  const std::map<int, Complex>& amplitudes() const noexcept { return amplitudes_; }
  int truncation() const noexcept { return truncation_; }

  /// Zero for indices that carry no amplitude.
  Complex amplitude(int m) const;
  double norm_squared() const;
  bool is_normalized(double tolerance = 1e-9) const;
  ModeVector normalized() const;

  /// True when exactly one index carries non-zero amplitude.
  bool is_eigenmode() const;

  friend bool operator==(const ModeVector&, const ModeVector&) = default;

 private:
  std::map<int, Complex> amplitudes_;
  int truncation_ = kDefaultTruncation;
};

/// Inner product <a|b> = sum_m conj(a_m) b_m.
Complex mode_overlap(const ModeVector& a, const ModeVector& b);

/// Equatorial superposition (e^{i l theta}|l> + e^{-i l theta}|-l>)/sqrt(2).
///
/// theta is the rotation angle of the 2l-sector phase mask, so the overlap of
/// two sector states of the same l has modulus |cos(l (theta_a - theta_b))|
/// and the family is periodic in theta with period pi/l up to a global sign.
ModeVector sector_state(int l, double theta, int truncation = kDefaultTruncation);

/// Sector state with its angle kept in canonical form, theta in [0, pi/l).
class SectorState {
 public:
  SectorState(int l, double theta);

  int l() const noexcept { return l_; }
  double theta() const noexcept { return theta_; }
  ModeVector to_mode_vector(int truncation = kDefaultTruncation) const;

  friend bool operator==(const SectorState&, const SectorState&) = default;

 private:
  int l_;
  double theta_;
};

/// Row-major phase map, values in [0, 2*pi).
struct PhaseGrid {
  int width = 0;
  int height = 0;
  std::vector<double> phase;

  double at(int x, int y) const { return phase[static_cast<std::size_t>(y) * width + x]; }
};

/// Phase-only mask arg(sum_m a_m e^{i m phi}) with phi the azimuth about
/// pixel (width/2, height/2), measured counter-clockwise with y pointing up.
/// The centre pixel is a singularity and is assigned phase 0.
PhaseGrid render_hologram(const ModeVector& mode, int width, int height);
PhaseGrid render_hologram(OamIndex m, int width, int height);

/// Binary 8-bit PGM (P5), phase mapped linearly 0 -> 0, 2*pi -> 255.
std::string to_pgm(const PhaseGrid& grid);
void write_pgm(const PhaseGrid& grid, const std::filesystem::path& path);

}  // namespace oamlink
