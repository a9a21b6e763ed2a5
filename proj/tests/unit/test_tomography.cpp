#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "oamlink/error.hpp"
#include "oamlink/tomography.hpp"
#include "oracles.hpp"

using namespace oamlink;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no oamlink::Error thrown";
  return ErrorKind::Parameter;
}

std::vector<CountRecord> exact_counts(const TwoQubitState& rho, double r0 = 1e6) {
  return with_expected_counts(simulate_tomo_counts(rho, NoiseModel::ideal(r0), 1.0, 0));
}

void expect_physical(const TwoQubitState& rho) {
  EXPECT_LE((rho.rho() - rho.rho().adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(rho.rho().trace().real(), 1.0, 1e-10);
  EXPECT_GE(rho.min_eigenvalue(), -1e-9);
}

}  // namespace

TEST(TomoBasis, SixteenNormalizedFullRank) {
  for (int l : {1, 2, 4}) {
    const auto basis = tomo_basis(l);
    ASSERT_EQ(basis.size(), 16u);
    EXPECT_EQ(basis[0].label, "LL");
    EXPECT_EQ(basis[1].label, "LR");
    EXPECT_EQ(basis[4].label, "RL");
    EXPECT_EQ(basis[15].label, "CC");
    // Gram matrix of the joint projectors |v><v| under the trace inner product
    std::vector<Vector4c> v;
    for (const auto& p : basis) {
      EXPECT_NEAR(p.a.mode.norm_squared(), 1.0, 1e-12);
      EXPECT_NEAR(p.b.mode.norm_squared(), 1.0, 1e-12);
      Vector4c x;
      const Complex ua[2] = {p.a.mode.amplitude(l), p.a.mode.amplitude(-l)};
      const Complex ub[2] = {p.b.mode.amplitude(l), p.b.mode.amplitude(-l)};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) x(2 * i + j) = ua[i] * ub[j];
      v.push_back(x);
    }
    Eigen::MatrixXd gram(16, 16);
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) gram(i, j) = std::norm(v[i].dot(v[j]));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    lu.setThreshold(1e-10);
    EXPECT_EQ(lu.rank(), 16);
  }
  EXPECT_EQ(kind_of([] { tomo_basis(0); }), ErrorKind::InvalidMode);
}

TEST(SimulateTomoCounts, IdealExamples) {
  const TwoQubitState phi = TwoQubitState::entangled(1);
  NoiseModel noise = NoiseModel::ideal(500.0);
  noise.accidental_rate = 2.0;
  const auto recs = simulate_tomo_counts(phi, noise, 10.0, 3);
  ASSERT_EQ(recs.size(), 16u);
  EXPECT_NEAR(recs[0].expected, 20.0, 1e-9);            // LL: accidentals only
  EXPECT_NEAR(recs[1].expected, 2500.0 + 20.0, 1e-9);   // LR
  for (const auto& r : recs) {
    EXPECT_GE(r.counts, 0.0);
    EXPECT_EQ(r.counts, std::round(r.counts));
  }
  const auto again = simulate_tomo_counts(phi, noise, 10.0, 3);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(recs[i].counts, again[i].counts);
}

TEST(SimulateTomoCounts, SuperpositionEfficiencyRatio) {
  const TwoQubitState rho = TwoQubitState::maximally_mixed(2);
  NoiseModel noise = NoiseModel::ideal(100.0);
  const auto full = simulate_tomo_counts(rho, noise, 1.0, 0);
  noise.eta_super = 0.8;
  const auto low = simulate_tomo_counts(rho, noise, 1.0, 0);
  for (std::size_t i = 0; i < 16; ++i) {
    const int supers = (full[i].a.mode.is_eigenmode() ? 0 : 1) + (full[i].b.mode.is_eigenmode() ? 0 : 1);
    EXPECT_NEAR(low[i].expected / full[i].expected, std::pow(0.8, supers), 1e-12) << full[i].a.label;
  }
}

TEST(LinearReconstruct, ExactCountsRecoverState) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    const TwoQubitState rho(1 + i % 3, random_density_matrix(rng));
    const LinearEstimate est = linear_reconstruct(exact_counts(rho));
    EXPECT_LE((est.rho - rho.rho()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE(est.physical);
  }
  const LinearEstimate mixed = linear_reconstruct(exact_counts(TwoQubitState::maximally_mixed(1)));
  EXPECT_LE((mixed.rho - Matrix4c::Identity() / 4.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearReconstruct, LowCountsMayBeUnphysicalButAreFlagged) {
  // pure states sit on the boundary; a few hundred counts push some
  // reconstructions outside
  int unphysical = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto recs = simulate_tomo_counts(TwoQubitState::entangled(1), NoiseModel::ideal(100.0), 1.0, seed);
    const LinearEstimate est = linear_reconstruct(recs);
    EXPECT_NEAR(est.rho.trace().real(), 1.0, 1e-12);
    EXPECT_LE((est.rho - est.rho.adjoint()).norm(), 1e-14);
    EXPECT_EQ(est.physical, est.min_eigenvalue >= -1e-9);
    if (!est.physical) ++unphysical;
  }
  EXPECT_GT(unphysical, 0);
}

TEST(LinearReconstruct, Errors) {
  auto recs = exact_counts(TwoQubitState::entangled(1));
  auto duplicated = recs;
  duplicated[15] = duplicated[14];
  EXPECT_EQ(kind_of([&] { linear_reconstruct(duplicated); }), ErrorKind::RankDeficiency);
  EXPECT_EQ(kind_of([&] { linear_reconstruct(std::span(recs).first(15)); }), ErrorKind::IncompleteSettings);
  auto zeros = recs;
  for (auto& r : zeros) r.counts = 0.0;
  EXPECT_EQ(kind_of([&] { linear_reconstruct(zeros); }), ErrorKind::Parameter);
  auto outside = recs;
  outside[0].a = eigen_setting(OamIndex{3});
  EXPECT_EQ(kind_of([&] { linear_reconstruct(outside); }), ErrorKind::InvalidProjector);
}

TEST(Mle, ExactEntangledCounts) {
  const TomographyResult r = mle_reconstruct(exact_counts(TwoQubitState::entangled(2)));
  EXPECT_GE(r.fidelity, 1.0 - 1e-6);
  expect_physical(r.rho_hat);
  EXPECT_EQ(r.rho_hat.l(), 2);
}

TEST(MleProperty, OutputsArePhysical) {
  std::mt19937_64 rng(40);
  for (int i = 0; i < 30; ++i) {
    const TwoQubitState truth(1, random_density_matrix(rng));
    const auto recs = simulate_tomo_counts(truth, NoiseModel::ideal(200.0), 1.0, i);
    const TomographyResult r = mle_reconstruct(recs);
    expect_physical(r.rho_hat);
    EXPECT_GE(r.fidelity, 0.0);
    EXPECT_LE(r.fidelity, 1.0);
  }
}

TEST(MleProperty, LikelihoodDominatesProjectedLinear) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 30; ++i) {
    const TwoQubitState truth =
        i % 2 ? TwoQubitState(1, random_density_matrix(rng)) : TwoQubitState::entangled(1);
    const auto recs = simulate_tomo_counts(truth, NoiseModel::ideal(300.0), 1.0, 100 + i);
    const TomographyResult r = mle_reconstruct(recs);
    const Matrix4c projected = project_to_physical(linear_reconstruct(recs).rho);
    EXPECT_GE(r.log_likelihood, log_likelihood(projected, recs) - 1e-9);
  }
}

TEST(MleProperty, AgreesWithInteriorLinearEstimate) {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (int i = 0; i < 30; ++i) {
    const TwoQubitState truth(1, random_density_matrix(rng));
    const auto recs = simulate_tomo_counts(truth, NoiseModel::ideal(1e5), 1.0, i);
    const LinearEstimate lin = linear_reconstruct(recs);
    if (lin.min_eigenvalue <= 1e-3) continue;
    ++checked;
    EXPECT_LT(trace_distance(mle_reconstruct(recs).rho_hat.rho(), lin.rho), 1e-4);
  }
  EXPECT_GT(checked, 10);
}

TEST(MleProperty, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> normal;
  const auto recs = simulate_tomo_counts(apply_white_noise(TwoQubitState::entangled(1), 0.3),
                                         NoiseModel::ideal(1e3), 1.0, 9);
  const CholeskyLikelihood model(recs);
  for (int point = 0; point < 10; ++point) {
    CholeskyLikelihood::Params x;
    for (int k = 0; k < CholeskyLikelihood::kParameters; ++k) x(k) = normal(rng);
    const auto g = model.gradient(x);
    for (int k = 0; k < CholeskyLikelihood::kParameters; ++k) {
      const double fd = oracle::central_difference(
          [&](double t) {
            auto y = x;
            y(k) = t;
            return model.value(y);
          },
          x(k), 1e-5 * std::max(1.0, std::abs(x(k))));
      EXPECT_NEAR(g(k), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "point " << point << " k " << k;
    }
  }
}

TEST(Mle, FactorRoundTrip) {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 10; ++i) {
    const Matrix4c rho = random_density_matrix(rng);
    const auto x = CholeskyLikelihood::params_from_density(rho);
    EXPECT_LE((CholeskyLikelihood::density(x) - rho).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix4c t = CholeskyLikelihood::factor(x);
    EXPECT_EQ(t(0, 1), Complex(0.0));
    EXPECT_EQ(t(3, 3).imag(), 0.0);
  }
}

TEST(Mle, InitFromSuppliedMatrix) {
  const auto recs = exact_counts(apply_white_noise(TwoQubitState::entangled(1), 0.2));
  const TomographyResult a = mle_reconstruct(recs);
  const TomographyResult b = mle_reconstruct(recs, Matrix4c(Matrix4c::Identity() / 4.0));
  EXPECT_TRUE(b.converged);
  EXPECT_LT(trace_distance(a.rho_hat.rho(), b.rho_hat.rho()), 1e-6);
}

TEST(Mle, IterationCapReportsNonConvergence) {
  const auto recs = simulate_tomo_counts(TwoQubitState::entangled(1), NoiseModel::ideal(1e4), 1.0, 2);
  const TomographyResult r = mle_reconstruct(recs, Matrix4c(Matrix4c::Identity() / 4.0), MleOptions{1e-8, 1});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  expect_physical(r.rho_hat);
}

TEST(Fidelity, Examples) {
  EXPECT_NEAR(fidelity(TwoQubitState::entangled(3)), 1.0, 1e-15);
  EXPECT_NEAR(fidelity(TwoQubitState::maximally_mixed(3)), 0.25, 1e-15);
  for (double p : {0.1, 0.2, 0.7}) {
    EXPECT_NEAR(fidelity(apply_white_noise(TwoQubitState::entangled(1), p)), oracle::werner_fidelity(p), 1e-15);
  }
}

TEST(FidelityProperty, Linear) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 50; ++i) {
    const Matrix4c a = random_density_matrix(rng);
    const Matrix4c b = random_density_matrix(rng);
    const double alpha = u(rng);
    EXPECT_NEAR(fidelity(Matrix4c(alpha * a + (1 - alpha) * b)), alpha * fidelity(a) + (1 - alpha) * fidelity(b),
                1e-12);
  }
}

TEST(Bootstrap, DeterministicAndSmallOnLargeCounts) {
  const auto recs = exact_counts(TwoQubitState::entangled(1), 1e6);
  const double a = bootstrap_fidelity_error(recs, 100, 9);
  EXPECT_EQ(a, bootstrap_fidelity_error(recs, 100, 9));
  EXPECT_LT(a, 1e-3);
  EXPECT_EQ(kind_of([&] { bootstrap_fidelity_error(recs, 1, 9); }), ErrorKind::Parameter);
}

TEST(Bootstrap, QuadrupledCountsHalveError) {
  const auto rho = apply_white_noise(TwoQubitState::entangled(1), 0.2);
  const auto base = exact_counts(rho, 2e3);
  const auto bright = exact_counts(rho, 8e3);
  const double e1 = bootstrap_fidelity_error(base, 400, 5);
  const double e4 = bootstrap_fidelity_error(bright, 400, 6);
  EXPECT_NEAR(e1 / e4, 2.0, 0.4);
}

TEST(CalibrateEtaSuper, HitsTargetOnExactCounts) {
  NoiseModel noise = NoiseModel::ideal(6295.0);
  noise.accidental_rate = 10.0;
  const double eta = calibrate_eta_super(2, 0.84, noise, 10.0);
  EXPECT_GT(eta, 0.0);
  EXPECT_LT(eta, 1.0);
  noise.eta_super = eta;
  const auto recs = with_expected_counts(simulate_tomo_counts(TwoQubitState::entangled(2), noise, 10.0, 0));
  EXPECT_NEAR(mle_reconstruct(recs).fidelity, 0.84, 1e-6);
  EXPECT_EQ(kind_of([&] { calibrate_eta_super(2, 0.999, noise, 10.0); }), ErrorKind::Parameter);
}

TEST(Export, DensityJsonAndCsv) {
  const TwoQubitState phi = TwoQubitState::entangled(2);
  const auto doc = nlohmann::json::parse(density_json(phi));
  EXPECT_EQ(doc.at("l").get<int>(), 2);
  ASSERT_EQ(doc.at("rho").size(), 4u);
  EXPECT_NEAR(doc.at("rho")[1][2].at("re").get<double>(), 0.5, 1e-15);
  EXPECT_EQ(doc.at("rho")[1][2].at("im").get<double>(), 0.0);
  const std::string re = density_csv(phi, false);
  EXPECT_EQ(re.substr(0, re.find('\n')), "row,+2+2,+2-2,-2+2,-2-2");
  EXPECT_EQ(std::count(re.begin(), re.end(), '\n'), 5);
  EXPECT_NE(density_csv(phi, true), re);
}

TEST(TraceDistance, Basics) {
  const Matrix4c a = TwoQubitState::entangled(1).rho();
  const Matrix4c b = TwoQubitState::maximally_mixed(1).rho();
  EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-15);
  EXPECT_NEAR(trace_distance(a, b), 0.75, 1e-12);
}
