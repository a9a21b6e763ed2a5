#include "oamlink/modes.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "oamlink/error.hpp"
#include "oamlink/io.hpp"

namespace oamlink {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phase) {
  double wrapped = std::fmod(phase, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod of a value a hair below 2*pi can round up to it.
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

}  // namespace

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidMode: return "invalid mode";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::EmptySubspace: return "empty subspace";
    case ErrorKind::InvalidProjector: return "invalid projector";
    case ErrorKind::InsufficientSpan: return "insufficient span";
    case ErrorKind::UndefinedCorrelation: return "undefined correlation";
    case ErrorKind::IncompleteSettings: return "incomplete settings";
    case ErrorKind::RankDeficiency: return "rank deficiency";
    case ErrorKind::EmptyDiagonal: return "empty diagonal";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

OamIndex OamIndex::checked(int v, int truncation) {
  if (truncation < 0) {
    throw Error(ErrorKind::Parameter, fmt::format("negative truncation {}", truncation));
  }
  if (std::abs(v) > truncation) {
    throw Error(ErrorKind::InvalidMode,
                fmt::format("OAM index {} outside truncation window [-{}, {}]", v, truncation,
                            truncation));
  }
  return OamIndex{v};
}

ModeVector::ModeVector(std::map<int, Complex> amplitudes, int truncation)
    : amplitudes_(std::move(amplitudes)), truncation_(truncation) {
  for (const auto& [m, a] : amplitudes_) {
    OamIndex::checked(m, truncation_);
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      throw Error(ErrorKind::Parameter, fmt::format("non-finite amplitude at m = {}", m));
    }
  }
}

ModeVector ModeVector::eigenmode(OamIndex m, int truncation) {
  return ModeVector({{m.value, Complex{1.0, 0.0}}}, truncation);
}

Complex ModeVector::amplitude(int m) const {
  auto it = amplitudes_.find(m);
  return it == amplitudes_.end() ? Complex{} : it->second;
}

double ModeVector::norm_squared() const {
  double total = 0.0;
  for (const auto& [m, a] : amplitudes_) total += std::norm(a);
  return total;
}

bool ModeVector::is_normalized(double tolerance) const {
  return std::abs(norm_squared() - 1.0) <= tolerance;
}

ModeVector ModeVector::normalized() const {
  const double n2 = norm_squared();
  if (!(n2 > 0.0)) throw Error(ErrorKind::Parameter, "cannot normalize a zero mode vector");
  const double scale = 1.0 / std::sqrt(n2);
  std::map<int, Complex> out;
  for (const auto& [m, a] : amplitudes_) out.emplace(m, a * scale);
  return ModeVector(std::move(out), truncation_);
}

bool ModeVector::is_eigenmode() const {
  int nonzero = 0;
  for (const auto& [m, a] : amplitudes_) {
    if (a != Complex{}) ++nonzero;
  }
  return nonzero == 1;
}

Complex mode_overlap(const ModeVector& a, const ModeVector& b) {
  Complex sum{};
  for (const auto& [m, amp] : a.amplitudes()) sum += std::conj(amp) * b.amplitude(m);
  return sum;
}

ModeVector sector_state(int l, double theta, int truncation) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("sector state needs l >= 1, got {}", l));
  const double s = 1.0 / std::numbers::sqrt2;
  const double phase = l * theta;
  return ModeVector({{l, std::polar(s, phase)}, {-l, std::polar(s, -phase)}}, truncation);
}

SectorState::SectorState(int l, double theta) : l_(l), theta_(0.0) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("sector state needs l >= 1, got {}", l));
  if (!std::isfinite(theta)) throw Error(ErrorKind::Parameter, "non-finite sector angle");
  const double period = std::numbers::pi / l;
  double reduced = std::fmod(theta, period);
  if (reduced < 0.0) reduced += period;
  if (reduced >= period) reduced = 0.0;
  theta_ = reduced;
}

ModeVector SectorState::to_mode_vector(int truncation) const {
  return sector_state(l_, theta_, truncation);
}

PhaseGrid render_hologram(const ModeVector& mode, int width, int height) {
  if (width < 16 || height < 16) {
    throw Error(ErrorKind::Parameter,
                fmt::format("hologram needs at least 16x16 pixels, got {}x{}", width, height));
  }
  PhaseGrid grid{width, height, std::vector<double>(static_cast<std::size_t>(width) * height, 0.0)};
  const int cx = width / 2;
  const int cy = height / 2;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x == cx && y == cy) continue;
      const double azimuth = std::atan2(static_cast<double>(cy - y), static_cast<double>(x - cx));
      Complex field{};
      for (const auto& [m, a] : mode.amplitudes()) field += a * std::polar(1.0, m * azimuth);
      grid.phase[static_cast<std::size_t>(y) * width + x] = wrap_phase(std::arg(field));
    }
  }
  return grid;
}

PhaseGrid render_hologram(OamIndex m, int width, int height) {
  return render_hologram(ModeVector({{m.value, Complex{1.0, 0.0}}}, std::abs(m.value)), width,
                         height);
}

std::string to_pgm(const PhaseGrid& grid) {
  std::string out = fmt::format("P5\n{} {}\n255\n", grid.width, grid.height);
  out.reserve(out.size() + grid.phase.size());
  for (double phase : grid.phase) {
    long level = std::lround(phase / kTwoPi * 255.0);
    if (level < 0) level = 0;
    if (level > 255) level = 255;
    out.push_back(static_cast<char>(static_cast<unsigned char>(level)));
  }
  return out;
}

void write_pgm(const PhaseGrid& grid, const std::filesystem::path& path) {
  write_text_file(path, to_pgm(grid));
}

}  // namespace oamlink
