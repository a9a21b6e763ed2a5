#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oamlink/measurement.hpp"
#include "oamlink/source.hpp"

namespace oamlink {

/// One of the sixteen product projectors.
struct ProjectorPair {
  Setting a;
  Setting b;
  std::string label;
};

/// Single-arm tomography states on {|L> = |l>, |R> = |-l>}, in basis order:
/// "L", "R", "D" = (|L> + |R>)/sqrt(2), "C" = (|L> - i|R>)/sqrt(2).
std::vector<Setting> tomo_side_states(int l, int truncation = kDefaultTruncation);

/// Cartesian product of the side states, arm A major: LL, LR, LD, LC, RL, ...
std::vector<ProjectorPair> tomo_basis(int l, int truncation = kDefaultTruncation);

/// Expected counts R0 T eta_a eta_b Tr(rho P_a x P_b) + accidentals T per
/// pair (eta_eigen for L/R, eta_super for D/C), Poisson-sampled.
std::vector<CountRecord> simulate_tomo_counts(const TwoQubitState& rho, const NoiseModel& noise,
                                              double integration_time, std::uint64_t seed);

struct LinearEstimate {
  Matrix4c rho;  // Hermitian, unit trace, possibly indefinite
  double min_eigenvalue = 0.0;
  bool physical = false;
};

/// Direct inversion of the linear map rho -> projector expectations, with the
/// unknown brightness absorbed by the trace. ErrorKind::RankDeficiency when
/// the settings do not span the 4x4 Hermitian matrices.
LinearEstimate linear_reconstruct(std::span<const CountRecord> records);

/// Eigenvalues clipped below at `floor`, then renormalized to unit trace.
Matrix4c project_to_physical(const Matrix4c& rho, double floor = 0.0);

/// Poisson log-likelihood of the records under rho, with the overall count
/// scale set to its maximizing value sum(n) / sum(p). Includes the
/// -log(n!) terms so values are comparable across estimators.
double log_likelihood(const Matrix4c& rho, std::span<const CountRecord> records);

/// Log-likelihood over the lower-triangular factor T, rho = T^+ T / Tr(T^+ T).
///
/// Parameter layout (16 reals): T00, T11, T22, T33, then (Re, Im) of T10,
/// T20, T21, T30, T31, T32.
class CholeskyLikelihood {
 public:
  static constexpr int kParameters = 16;
  using Params = Eigen::Matrix<double, kParameters, 1>;

  explicit CholeskyLikelihood(std::span<const CountRecord> records);

  double value(const Params& x) const;
  Params gradient(const Params& x) const;
  double total_counts() const noexcept { return total_; }

  static Matrix4c factor(const Params& x);
  static Matrix4c density(const Params& x);
  /// Factor of a positive-definite rho (scaled so Tr(T^+ T) = 1).
  static Params params_from_density(const Matrix4c& rho);

 private:
  std::vector<Vector4c> projectors_;
  std::vector<double> counts_;
  std::vector<double> log_factorials_;
  double total_ = 0.0;
};

struct MleOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 10000;
};

struct TomographyResult {
  TwoQubitState rho_hat;
  double fidelity = 0.0;
  double fidelity_stderr = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Maximizes the Poisson likelihood over physical states by quasi-Newton
/// (BFGS) ascent in the T parameterization. Starts from `init` or, by
/// default, the linear estimate with eigenvalues floored at 1e-6. Never
/// throws on slow convergence; see TomographyResult::converged.
TomographyResult mle_reconstruct(std::span<const CountRecord> records,
                                 const std::optional<Matrix4c>& init = std::nullopt,
                                 const MleOptions& options = {});

/// <Phi_l| rho |Phi_l>.
double fidelity(const Matrix4c& rho);
double fidelity(const TwoQubitState& rho);

/// Standard deviation of the reconstructed fidelity over Poisson resamples of
/// the counts. Resample r uses split_seed(seed, r), so the result does not
/// depend on how resamples are scheduled across threads.
double bootstrap_fidelity_error(std::span<const CountRecord> records, int n_resamples,
                                std::uint64_t seed, const MleOptions& options = {1e-7, 2000});

/// eta_super (with eta_eigen held at its value in `noise`) at which the
/// reconstruction of exact expected counts from the pure |Phi>_l reaches
/// `target_fidelity`. Bisection over (0, eta_eigen]; ErrorKind::Parameter
/// when the target is not bracketed.
double calibrate_eta_super(int l, double target_fidelity, NoiseModel noise, double integration_time);

double trace_distance(const Matrix4c& a, const Matrix4c& b);

/// Random full-rank density matrix G G^+ / Tr, G with i.i.d. complex normal
/// entries.
Matrix4c random_density_matrix(std::mt19937_64& rng);

/// {"l": int, "rho": [[{"re","im"} x4] x4]}
std::string density_json(const TwoQubitState& rho);
/// 4x4 CSV of real or imaginary parts with basis labels.
std::string density_csv(const TwoQubitState& rho, bool imaginary);

}  // namespace oamlink
