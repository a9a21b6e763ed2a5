#include "oamlink/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oamlink/error.hpp"
#include "oamlink/io.hpp"
#include "oamlink/tomography.hpp"

namespace oamlink {

namespace {

constexpr int kBootstrapResamples = 1000;
constexpr int kFringePoints = 16;

using Paths = std::vector<std::filesystem::path>;

std::filesystem::path emit(Paths& written, const ExperimentConfig& config, const std::string& name,
                           std::string_view contents) {
  const std::filesystem::path path = std::filesystem::path(config.output_dir) / name;
  write_text_file(path, contents);
  written.push_back(path);
  return path;
}

std::string dump(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

std::uint64_t stream_seed(const ExperimentConfig& config, SeedStream stream) {
  return split_seed(config.seed, static_cast<std::uint64_t>(stream));
}

JointOamState source_state(const ExperimentConfig& config) {
  return JointOamState(gaussian_spiral_spectrum(config.pump(), config.sigma, config.truncation));
}

TwoQubitState subspace_state(const ExperimentConfig& config) {
  return apply_white_noise(post_select(source_state(config), config.subspace_l), config.white_noise);
}

NoiseModel subspace_noise(const ExperimentConfig& config) {
  const JointOamState state = source_state(config);
  const int l = config.subspace_l;
  double kept = 0.0;
  for (int a : {l, -l}) {
    for (int b : {l, -l}) kept += state.pair_probability(a, b);
  }
  NoiseModel noise = config.noise;
  noise.rate_constant *= kept;
  return noise;
}

int correlation_window(const ExperimentConfig& config) { return std::min(5, config.truncation); }

Paths cmd_correlation(const ExperimentConfig& config) {
  config.validate();
  ensure_directory(config.output_dir);
  const int m = correlation_window(config);
  const CorrelationMatrix matrix = correlation_matrix(source_state(config), -m, m, config.noise,
                                                      config.integration_time,
                                                      stream_seed(config, SeedStream::Correlation));
  Paths written;
  emit(written, config, "expected.csv", correlation_csv(matrix, false));
  emit(written, config, "sampled.csv", correlation_csv(matrix, true));
  emit(written, config, "anti_diagonal.csv", anti_diagonal_csv(matrix));

  nlohmann::ordered_json doc;
  doc["l_p"] = matrix.pump.value;
  doc["m_min"] = matrix.m_min;
  doc["m_max"] = matrix.m_max;
  doc["T"] = matrix.integration_time;
  doc["peak_expected"] = *std::max_element(matrix.expected.begin(), matrix.expected.end());
  doc["fwhm_modes"] = spiral_bandwidth(matrix);
  doc["gaussian_fwhm"] = 2.0 * std::sqrt(2.0 * std::log(2.0)) * config.sigma;
  emit(written, config, "bandwidth.json", dump(doc));
  return written;
}

Paths cmd_fringes(const ExperimentConfig& config) {
  config.validate();
  ensure_directory(config.output_dir);
  const int l = config.subspace_l;
  const QuantumState state = subspace_state(config);
  const NoiseModel noise = subspace_noise(config);
  const std::vector<double> grid = default_fringe_grid(l, kFringePoints);
  const std::array<double, 2> theta_b = {0.0, std::numbers::pi / (4.0 * l)};
  const std::uint64_t seed = stream_seed(config, SeedStream::Fringes);

  std::vector<CountRecord> all;
  std::vector<FringeFit> fits;
  nlohmann::ordered_json fit_docs = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < theta_b.size(); ++k) {
    const auto records = fringe_scan(state, l, theta_b[k], grid, noise, config.integration_time,
                                     split_seed(seed, k));
    fits.push_back(fit_fringe(records, l));
    auto doc = nlohmann::ordered_json::parse(to_json(fits.back()));
    doc["theta_b"] = theta_b[k];
    fit_docs.push_back(doc);
    all.insert(all.end(), records.begin(), records.end());
  }
  Paths written;
  emit(written, config, "records.jsonl", records_jsonl(all));
  nlohmann::ordered_json doc;
  doc["l"] = l;
  doc["white_noise"] = config.white_noise;
  doc["fits"] = fit_docs;
  emit(written, config, "fit.json", dump(doc));
  emit(written, config, "fringe.svg", fringe_svg(all, l, theta_b, fits));
  return written;
}

Paths cmd_chsh(const ExperimentConfig& config) {
  config.validate();
  ensure_directory(config.output_dir);
  const int l = config.subspace_l;
  const auto records = chsh_scan(subspace_state(config), l, subspace_noise(config), config.integration_time,
                                 stream_seed(config, SeedStream::ChshCounts));
  const ChshResult result =
      chsh(records, l, ChshOptions{kBootstrapResamples, stream_seed(config, SeedStream::ChshBootstrap)});
  Paths written;
  emit(written, config, "chsh.json", to_json(result));
  return written;
}

Paths cmd_tomo(const ExperimentConfig& config) {
  config.validate();
  ensure_directory(config.output_dir);
  const auto records = simulate_tomo_counts(subspace_state(config), subspace_noise(config),
                                            config.integration_time, stream_seed(config, SeedStream::TomoCounts));
  const LinearEstimate linear = linear_reconstruct(records);
  TomographyResult result = mle_reconstruct(records);
  result.fidelity_stderr =
      bootstrap_fidelity_error(records, kBootstrapResamples, stream_seed(config, SeedStream::TomoBootstrap));

  Paths written;
  emit(written, config, "tomo_counts.jsonl", records_jsonl(records));
  emit(written, config, "rho.json", density_json(result.rho_hat));
  emit(written, config, "rho_real.csv", density_csv(result.rho_hat, false));
  emit(written, config, "rho_imag.csv", density_csv(result.rho_hat, true));
  nlohmann::ordered_json doc;
  doc["l"] = config.subspace_l;
  doc["fidelity"] = result.fidelity;
  doc["stderr"] = result.fidelity_stderr;
  doc["resamples"] = kBootstrapResamples;
  doc["log_likelihood"] = result.log_likelihood;
  doc["converged"] = result.converged;
  doc["iterations"] = result.iterations;
  doc["linear_min_eigenvalue"] = linear.min_eigenvalue;
  emit(written, config, "fidelity.json", dump(doc));
  return written;
}

Paths cmd_hologram(const ExperimentConfig& config, const HologramRequest& request) {
  config.validate();
  PhaseGrid grid;
  std::string name;
  if (request.oam) {
    grid = render_hologram(OamIndex::checked(*request.oam, config.truncation), request.width, request.height);
    name = fmt::format("hologram_m{}.pgm", *request.oam);
  } else {
    const int l = request.l.value_or(config.subspace_l);
    grid = render_hologram(sector_state(l, request.theta, std::max(config.truncation, l)), request.width,
                           request.height);
    name = fmt::format("hologram_l{}_theta{:.6f}.pgm", l, request.theta);
  }
  ensure_directory(config.output_dir);
  Paths written;
  emit(written, config, name, to_pgm(grid));
  return written;
}

std::string fringe_svg(std::span<const CountRecord> records, int l, std::span<const double> theta_b,
                       std::span<const FringeFit> fits) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 400.0;
  constexpr double kMargin = 50.0;
  constexpr std::array<const char*, 4> kColours = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  const double period = std::numbers::pi / l;
  double ymax = 1.0;
  for (const auto& r : records) ymax = std::max(ymax, r.counts);
  for (const auto& f : fits) ymax = std::max(ymax, f.amplitude + f.offset);
  ymax *= 1.05;
  auto px = [&](double theta) { return kMargin + (kWidth - 2 * kMargin) * theta / period; };
  auto py = [&](double counts) { return kHeight - kMargin - (kHeight - 2 * kMargin) * counts / ymax; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      kWidth, kHeight, kWidth, kHeight);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kMargin,
                     kHeight - kMargin, kWidth - kMargin);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kMargin,
                     kHeight - kMargin, kMargin);
  out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\">theta_A (0 .. pi/{})</text>\n",
                     kWidth / 2 - 40, kHeight - 15, l);
  out += fmt::format("<text x=\"5\" y=\"{}\" font-size=\"12\">counts (max {:.0f})</text>\n", kMargin - 10, ymax);
  for (std::size_t k = 0; k < theta_b.size() && k < fits.size(); ++k) {
    const char* colour = kColours[k % kColours.size()];
    std::string points;
    for (int i = 0; i <= 180; ++i) {
      const double t = period * i / 180.0;
      points += fmt::format("{:.3f},{:.3f} ", px(t), py(fits[k].evaluate(t)));
    }
    points.pop_back();
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" points=\"{}\"/>\n", colour, points);
    for (const auto& r : records) {
      if (!r.a.theta || !r.b.theta || std::abs(*r.b.theta - theta_b[k]) > 1e-12) continue;
      out += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"3\" fill=\"{}\"/>\n", px(*r.a.theta),
                         py(r.counts), colour);
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">theta_B = {:.4f}, V = {:.4f}</text>\n",
                       kWidth - 230, kMargin + 16 * k, colour, theta_b[k], fits[k].visibility);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace oamlink
