#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "oamlink/analysis.hpp"
#include "oamlink/error.hpp"
#include "oamlink/tomography.hpp"
#include "oracles.hpp"

using namespace oamlink;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no oamlink::Error thrown";
  return ErrorKind::Parameter;
}

std::vector<CountRecord> model_records(int l, double a, double b, double phase, int n) {
  std::vector<CountRecord> out;
  for (const double t : default_fringe_grid(l, n)) {
    CountRecord r;
    r.l = l;
    r.a = sector_setting(l, t);
    r.b = sector_setting(l, 0.0);
    r.integration_time = 1.0;
    const double c = std::cos(l * (t - phase));
    r.counts = r.expected = a * c * c + b;
    out.push_back(r);
  }
  return out;
}

std::vector<CountRecord> exact_chsh(const TwoQubitState& rho, double r0 = 1e4) {
  return with_expected_counts(chsh_scan(rho, rho.l(), NoiseModel::ideal(r0), 1.0, 0));
}

}  // namespace

TEST(FitFringe, RecoversModelParameters) {
  for (int l : {1, 2, 3}) {
    for (double phase : {0.0, 0.3 / l, 0.9 / l}) {
      const auto recs = model_records(l, 1200.0, 80.0, phase, 24);
      const FringeFit f = fit_fringe(recs, l);
      EXPECT_NEAR(f.amplitude / 1200.0, 1.0, 1e-6);
      EXPECT_NEAR(f.offset / 80.0, 1.0, 1e-6);
      EXPECT_NEAR(f.phase, phase, 1e-6);
      EXPECT_NEAR(f.visibility, 1200.0 / 1360.0, 1e-9);
      EXPECT_FALSE(f.degenerate);
      for (const auto& r : recs) EXPECT_NEAR(f.evaluate(*r.a.theta), r.counts, 1e-6);
    }
  }
}

TEST(FitFringe, ZeroOffsetIsPinned) {
  // Perfect fringe: the free fit lands on B ~ 0 from either side.
  const auto recs = model_records(2, 500.0, 0.0, 0.2, 16);
  const FringeFit f = fit_fringe(recs, 2);
  EXPECT_GE(f.offset, 0.0);
  EXPECT_NEAR(f.amplitude, 500.0, 1e-6);
  EXPECT_NEAR(f.visibility, 1.0, 1e-9);
  EXPECT_NEAR(f.phase, 0.2, 1e-6);
}

TEST(FitFringe, WernerVisibilityIsOneMinusP) {
  for (double p : {0.0, 0.1064, 0.1923, 0.5, 0.9}) {
    const TwoQubitState rho = apply_white_noise(TwoQubitState::entangled(1), p);
    const auto recs = with_expected_counts(
        fringe_scan(rho, 1, 0.0, default_fringe_grid(1, 16), NoiseModel::ideal(1e4), 1.0, 0));
    EXPECT_NEAR(fit_fringe(recs, 1).visibility, oracle::werner_visibility(p), 1e-9) << "p=" << p;
  }
}

TEST(FitFringe, Errors) {
  auto recs = model_records(1, 10.0, 1.0, 0.0, 16);
  EXPECT_EQ(kind_of([&] { fit_fringe(std::span(recs).first(5), 1); }), ErrorKind::InsufficientSpan);
  // 8 points over half a period
  EXPECT_EQ(kind_of([&] { fit_fringe(std::span(recs).first(8), 1); }), ErrorKind::InsufficientSpan);
  EXPECT_EQ(kind_of([&] { fit_fringe(recs, 0); }), ErrorKind::InvalidMode);
  // a pi/2 span is a full period for l = 2
  auto l2 = model_records(2, 10.0, 1.0, 0.0, 8);
  EXPECT_NO_THROW(fit_fringe(l2, 2));
}

TEST(FitFringe, ConstantCountsAreDegenerate) {
  auto recs = model_records(1, 0.0, 42.0, 0.0, 10);
  const FringeFit f = fit_fringe(recs, 1);
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(f.visibility, 0.0);
  EXPECT_EQ(f.offset, 42.0);
}

TEST(CorrelationE, ValuesAndErrors) {
  EXPECT_EQ(correlation_E(1, 1, 0, 0), 1.0);
  EXPECT_EQ(correlation_E(0, 0, 3, 5), -1.0);
  EXPECT_EQ(correlation_E(2, 2, 2, 2), 0.0);
  EXPECT_EQ(kind_of([] { correlation_E(0, 0, 0, 0); }), ErrorKind::UndefinedCorrelation);
  EXPECT_EQ(kind_of([] { correlation_E(-1, 0, 0, 0); }), ErrorKind::Parameter);
}

TEST(CorrelationEProperty, WithinUnitInterval) {
  std::mt19937_64 rng(2);
  std::exponential_distribution<double> counts(0.01);
  for (int i = 0; i < 2000; ++i) {
    const double e = correlation_E(counts(rng), counts(rng), counts(rng), counts(rng));
    EXPECT_GE(e, -1.0);
    EXPECT_LE(e, 1.0);
  }
}

TEST(Chsh, IdealStateReachesTsirelson) {
  for (int l : {1, 2, 3}) {
    const ChshResult r = chsh(exact_chsh(TwoQubitState::entangled(l)), l, {0, 0});
    EXPECT_NEAR(r.S, 2 * std::sqrt(2.0), 1e-9) << "l=" << l;
    EXPECT_EQ(r.resamples, 0);
  }
}

TEST(ChshProperty, WernerFamily) {
  for (int k = 0; k <= 20; ++k) {
    const double p = k / 20.0;
    for (int l : {1, 2}) {
      const auto rho = apply_white_noise(TwoQubitState::entangled(l), p);
      EXPECT_NEAR(chsh(exact_chsh(rho), l, {0, 0}).S, oracle::werner_chsh(p), 1e-9);
    }
  }
}

TEST(ChshProperty, TsirelsonBoundOnRandomStates) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; ++i) {
    const TwoQubitState rho(1 + i % 2, random_density_matrix(rng));
    const double s = chsh(exact_chsh(rho), rho.l(), {0, 0}).S;
    EXPECT_LE(std::abs(s), 2 * std::sqrt(2.0) + 1e-9);
  }
}

TEST(Chsh, MissingSettingAndAngleMatching) {
  auto recs = exact_chsh(TwoQubitState::entangled(1));
  // angles equal modulo pi/l still match
  for (auto& r : recs) {
    r.a = sector_setting(1, *r.a.theta + kPi);
  }
  EXPECT_NEAR(chsh(recs, 1, {0, 0}).S, 2 * std::sqrt(2.0), 1e-9);
  recs.pop_back();
  EXPECT_EQ(kind_of([&] { chsh(recs, 1, {0, 0}); }), ErrorKind::IncompleteSettings);
}

TEST(Chsh, BootstrapDeterministicAndSized) {
  const auto rho = apply_white_noise(TwoQubitState::entangled(1), 0.2);
  const auto recs = chsh_scan(rho, 1, NoiseModel::ideal(3000.0), 10.0, 5);
  const ChshResult a = chsh(recs, 1, {500, 17});
  const ChshResult b = chsh(recs, 1, {500, 17});
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.resamples, 500);
  // analytic delta-method scale: each E from ~ N counts has variance (1 - E^2)/N
  double var = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    double n = 0.0;
    for (std::size_t j = 0; j < 4; ++j) n += recs[4 * k + j].counts;
    var += (1.0 - a.E[k] * a.E[k]) / n;
  }
  EXPECT_NEAR(a.std_error / std::sqrt(var), 1.0, 0.15);
}

TEST(Fwhm, SingleSampleIsOneMode) {
  const double w[] = {0.0, 0.0, 5.0, 0.0};
  EXPECT_NEAR(fwhm_modes(w), 1.0, 1e-12);
  const double lone[] = {3.0};
  EXPECT_NEAR(fwhm_modes(lone), 1.0, 1e-12);
}

TEST(Fwhm, SampledGaussians) {
  for (const auto& ref : oracle::kSampledGaussianFwhm) {
    std::vector<double> w;
    for (int m = -5; m <= 5; ++m) w.push_back(std::exp(-m * m / (2 * ref.sigma * ref.sigma)));
    EXPECT_NEAR(fwhm_modes(w), ref.fwhm, 1e-12);
    EXPECT_NEAR(fwhm_modes(w) / oracle::gaussian_fwhm(ref.sigma), 1.0, 0.02);
  }
  const double empty[] = {0.0, 0.0};
  EXPECT_EQ(kind_of([&] { fwhm_modes(empty); }), ErrorKind::EmptyDiagonal);
}

TEST(SpiralBandwidth, NoiselessGaussianSpectrum) {
  for (const auto& ref : oracle::kSampledGaussianFwhm) {
    const JointOamState j = build_joint_state(gaussian_spiral_spectrum(OamIndex{0}, ref.sigma));
    const auto c = correlation_matrix(j, -5, 5, NoiseModel::ideal(1e4), 10.0, 1);
    EXPECT_NEAR(spiral_bandwidth(c), ref.fwhm, 1e-9);
  }
}

TEST(SpiralBandwidth, EmptyAntiDiagonal) {
  CorrelationMatrix c;
  c.m_min = -1;
  c.m_max = 1;
  c.pump = OamIndex{0};
  c.expected.assign(9, 0.0);
  c.sampled.assign(9, 0.0);
  EXPECT_EQ(kind_of([&] { spiral_bandwidth(c); }), ErrorKind::EmptyDiagonal);
}

TEST(Serialization, FitAndChshJson) {
  const auto recs = model_records(1, 100.0, 5.0, 0.1, 16);
  const auto f = nlohmann::json::parse(to_json(fit_fringe(recs, 1)));
  EXPECT_NEAR(f.at("visibility").get<double>(), 100.0 / 110.0, 1e-9);
  const auto c = nlohmann::json::parse(to_json(chsh(exact_chsh(TwoQubitState::entangled(1)), 1, {10, 1})));
  EXPECT_NEAR(c.at("S").get<double>(), 2 * std::sqrt(2.0), 1e-9);
  EXPECT_TRUE(c.contains("stderr"));
  EXPECT_EQ(c.at("E").size(), 4u);
  const std::string curve = fringe_curve_csv(fit_fringe(recs, 1), 5);
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 6);
  EXPECT_EQ(curve.substr(0, curve.find('\n')), "theta,fitted_counts");
}
