#include "oamlink/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oamlink/error.hpp"

namespace oamlink {

namespace {

using Matrix2c = Eigen::Matrix<Complex, 2, 2>;
using Vector2c = Eigen::Matrix<Complex, 2, 1>;
using Params = CholeskyLikelihood::Params;
using Hessian = Eigen::Matrix<double, CholeskyLikelihood::kParameters, CholeskyLikelihood::kParameters>;

constexpr double kInitEigenFloor = 1e-6;

// Lower-triangular off-diagonal positions in parameter order.
constexpr std::array<std::array<int, 2>, 6> kOffDiagonal = {{{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

Vector2c subspace_vector(const ModeVector& v, int l, const char* arm) {
  double outside = 0.0;
  for (const auto& [m, amp] : v.amplitudes()) {
    if (m != l && m != -l) outside += std::norm(amp);
  }
  if (outside > 1e-12) {
    throw Error(ErrorKind::InvalidProjector,
                fmt::format("tomography setting on arm {} leaves the {{{}, -{}}} subspace", arm, l, l));
  }
  return Vector2c(v.amplitude(l), v.amplitude(-l));
}

Vector4c joint_vector(const CountRecord& r) {
  if (r.l <= 0) throw Error(ErrorKind::InvalidMode, "tomography record without a subspace index");
  const Vector2c u = subspace_vector(r.a.mode, r.l, "A");
  const Vector2c w = subspace_vector(r.b.mode, r.l, "B");
  Vector4c v;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) v(joint_index(i, j)) = u(i) * w(j);
  }
  return v;
}

std::array<Matrix2c, 4> pauli() {
  const Complex i{0.0, 1.0};
  Matrix2c s0, s1, s2, s3;
  s0 << 1, 0, 0, 1;
  s1 << 0, 1, 1, 0;
  s2 << 0, -i, i, 0;
  s3 << 1, 0, 0, -1;
  return {s0, s1, s2, s3};
}

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int r1 = 0; r1 < 2; ++r1)
    for (int c1 = 0; c1 < 2; ++c1)
      for (int r2 = 0; r2 < 2; ++r2)
        for (int c2 = 0; c2 < 2; ++c2) out(2 * r1 + r2, 2 * c1 + c2) = a(r1, c1) * b(r2, c2);
  return out;
}

Matrix4c hermitian_part(const Matrix4c& m) { return 0.5 * (m + m.adjoint()); }

Matrix4c reversal() {
  Matrix4c j = Matrix4c::Zero();
  for (int k = 0; k < 4; ++k) j(k, 3 - k) = 1.0;
  return j;
}

}  // namespace

std::vector<Setting> tomo_side_states(int l, int truncation) {
  if (l <= 0) throw Error(ErrorKind::InvalidMode, fmt::format("tomography needs l >= 1, got {}", l));
  const double s = 1.0 / std::numbers::sqrt2;
  return {
      Setting{ModeVector({{l, 1.0}}, truncation), "L", std::nullopt},
      Setting{ModeVector({{-l, 1.0}}, truncation), "R", std::nullopt},
      Setting{ModeVector({{l, s}, {-l, s}}, truncation), "D", std::nullopt},
      Setting{ModeVector({{l, s}, {-l, Complex{0.0, -s}}}, truncation), "C", std::nullopt},
  };
}

std::vector<ProjectorPair> tomo_basis(int l, int truncation) {
  const auto side = tomo_side_states(l, truncation);
  std::vector<ProjectorPair> out;
  out.reserve(side.size() * side.size());
  for (const auto& a : side) {
    for (const auto& b : side) out.push_back(ProjectorPair{a, b, a.label + b.label});
  }
  return out;
}

std::vector<CountRecord> simulate_tomo_counts(const TwoQubitState& rho, const NoiseModel& noise,
                                              double integration_time, std::uint64_t seed) {
  if (!(integration_time > 0.0)) throw Error(ErrorKind::Parameter, "integration time must be > 0");
  const auto basis = tomo_basis(rho.l(), std::max(kDefaultTruncation, rho.l()));
  std::vector<CountRecord> out;
  out.reserve(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    CountRecord r;
    r.l = rho.l();
    r.a = basis[k].a;
    r.b = basis[k].b;
    r.integration_time = integration_time;
    const double rate = coincidence_rate(rho, r.a.mode, r.b.mode, noise);
    r.expected = rate * integration_time;
    r.counts = static_cast<double>(sample_counts(rate, integration_time, split_seed(seed, k)));
    out.push_back(std::move(r));
  }
  return out;
}

LinearEstimate linear_reconstruct(std::span<const CountRecord> records) {
  if (records.size() < 16) {
    throw Error(ErrorKind::IncompleteSettings,
                fmt::format("linear inversion needs 16 settings, got {}", records.size()));
  }
  const auto sigma = pauli();
  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd design(n, 16);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = records[static_cast<std::size_t>(k)];
    const Vector2c u = subspace_vector(r.a.mode, r.l, "A");
    const Vector2c w = subspace_vector(r.b.mode, r.l, "B");
    for (int i = 0; i < 4; ++i) {
      const double ea = (u.adjoint() * sigma[i] * u)(0, 0).real();
      for (int j = 0; j < 4; ++j) {
        design(k, 4 * i + j) = ea * (w.adjoint() * sigma[j] * w)(0, 0).real();
      }
    }
    if (r.counts < 0.0) throw Error(ErrorKind::Parameter, "negative coincidence count");
    rhs(k) = r.counts;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0)) {
    throw Error(ErrorKind::RankDeficiency,
                fmt::format("settings span only a degenerate design (condition {:.3e})",
                            sv(0) / std::max(sv(sv.size() - 1), 1e-300)));
  }
  const Eigen::VectorXd y = svd.solve(rhs);
  Matrix4c unnormalized = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) unnormalized += y(4 * i + j) * kron(sigma[i], sigma[j]);
  }
  const double trace = unnormalized.trace().real();
  if (!(trace > 0.0)) throw Error(ErrorKind::Parameter, "counts carry no positive total");

  LinearEstimate est;
  est.rho = hermitian_part(unnormalized / trace);
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(est.rho, Eigen::EigenvaluesOnly);
  est.min_eigenvalue = eig.eigenvalues().minCoeff();
  est.physical = est.min_eigenvalue >= -1e-9;
  return est;
}

Matrix4c project_to_physical(const Matrix4c& rho, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(hermitian_part(rho));
  Eigen::Vector4d values = eig.eigenvalues().cwiseMax(floor);
  const double total = values.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::Parameter, "matrix has no positive spectrum to keep");
  values /= total;
  const Matrix4c& vecs = eig.eigenvectors();
  return hermitian_part(vecs * values.cast<Complex>().asDiagonal() * vecs.adjoint());
}

double log_likelihood(const Matrix4c& rho, std::span<const CountRecord> records) {
  double total = 0.0;
  double psum = 0.0;
  std::vector<double> p;
  p.reserve(records.size());
  for (const auto& r : records) {
    const Vector4c v = joint_vector(r);
    p.push_back(std::max(0.0, (v.adjoint() * rho * v)(0, 0).real()));
    psum += p.back();
    total += r.counts;
  }
  if (!(psum > 0.0)) return -std::numeric_limits<double>::infinity();
  const double scale = total / psum;
  double ll = 0.0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const double n = records[k].counts;
    const double mu = scale * p[k];
    if (n > 0.0) {
      if (mu <= 0.0) return -std::numeric_limits<double>::infinity();
      ll += n * std::log(mu);
    }
    ll -= mu + std::lgamma(n + 1.0);
  }
  return ll;
}

CholeskyLikelihood::CholeskyLikelihood(std::span<const CountRecord> records) {
  for (const auto& r : records) {
    if (r.counts < 0.0) throw Error(ErrorKind::Parameter, "negative coincidence count");
    projectors_.push_back(joint_vector(r));
    counts_.push_back(r.counts);
    log_factorials_.push_back(std::lgamma(r.counts + 1.0));
    total_ += r.counts;
  }
  if (!(total_ > 0.0)) throw Error(ErrorKind::Parameter, "counts carry no positive total");
}

Matrix4c CholeskyLikelihood::factor(const Params& x) {
  Matrix4c t = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = x(i);
  for (std::size_t p = 0; p < kOffDiagonal.size(); ++p) {
    t(kOffDiagonal[p][0], kOffDiagonal[p][1]) = Complex{x(4 + 2 * p), x(5 + 2 * p)};
  }
  return t;
}

Matrix4c CholeskyLikelihood::density(const Params& x) {
  const Matrix4c t = factor(x);
  const Matrix4c g = t.adjoint() * t;
  return hermitian_part(g / g.trace().real());
}

CholeskyLikelihood::Params CholeskyLikelihood::params_from_density(const Matrix4c& rho) {
  // rho = T^+ T with T lower triangular: Cholesky of the index-reversed
  // matrix J rho J = L L^+ gives T = J L^+ J.
  const Matrix4c j = reversal();
  const Matrix4c reversed = hermitian_part(j * rho * j);
  Eigen::LLT<Matrix4c> llt(reversed);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::Parameter, "starting density matrix is not positive definite");
  }
  const Matrix4c l = llt.matrixL();
  Matrix4c t = j * l.adjoint() * j;
  t /= std::sqrt((t.adjoint() * t).trace().real());
  Params x;
  for (int i = 0; i < 4; ++i) x(i) = t(i, i).real();
  for (std::size_t p = 0; p < kOffDiagonal.size(); ++p) {
    const Complex z = t(kOffDiagonal[p][0], kOffDiagonal[p][1]);
    x(4 + 2 * p) = z.real();
    x(5 + 2 * p) = z.imag();
  }
  return x;
}

namespace {

// sum n_k log q_k - N log sum q_k, where q_k = |T v_k|^2; this is the profiled
// Poisson log-likelihood up to parameter-free constants.
double kernel_value(const Matrix4c& t, const std::vector<Vector4c>& proj, const std::vector<double>& n,
                    double total) {
  double acc = 0.0;
  double qsum = 0.0;
  for (std::size_t k = 0; k < proj.size(); ++k) {
    const double q = (t * proj[k]).squaredNorm();
    qsum += q;
    if (n[k] > 0.0) {
      if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
      acc += n[k] * std::log(q);
    }
  }
  if (!(qsum > 0.0)) return -std::numeric_limits<double>::infinity();
  return acc - total * std::log(qsum);
}

}  // namespace

double CholeskyLikelihood::value(const Params& x) const {
  const double kernel = kernel_value(factor(x), projectors_, counts_, total_);
  double constants = total_ * std::log(total_) - total_;
  for (double lf : log_factorials_) constants -= lf;
  return kernel + constants;
}

CholeskyLikelihood::Params CholeskyLikelihood::gradient(const Params& x) const {
  const Matrix4c t = factor(x);
  std::vector<Vector4c> image(projectors_.size());
  std::vector<double> q(projectors_.size());
  double qsum = 0.0;
  for (std::size_t k = 0; k < projectors_.size(); ++k) {
    image[k] = t * projectors_[k];
    q[k] = image[k].squaredNorm();
    qsum += q[k];
  }
  // d q_k = 2 Re sum_ij conj((T v)_i) v_j dT_ij
  Matrix4c m = Matrix4c::Zero();
  for (std::size_t k = 0; k < projectors_.size(); ++k) {
    const double coef = (counts_[k] > 0.0 ? counts_[k] / q[k] : 0.0) - total_ / qsum;
    m += coef * (image[k].conjugate() * projectors_[k].transpose());
  }
  Params g;
  for (int i = 0; i < 4; ++i) g(i) = 2.0 * m(i, i).real();
  for (std::size_t p = 0; p < kOffDiagonal.size(); ++p) {
    const Complex z = m(kOffDiagonal[p][0], kOffDiagonal[p][1]);
    g(4 + 2 * p) = 2.0 * z.real();
    g(5 + 2 * p) = -2.0 * z.imag();
  }
  return g;
}

TomographyResult mle_reconstruct(std::span<const CountRecord> records, const std::optional<Matrix4c>& init,
                                 const MleOptions& options) {
  const CholeskyLikelihood model(records);
  const int l = records.front().l;
  const Matrix4c start = project_to_physical(init ? *init : linear_reconstruct(records).rho, kInitEigenFloor);

  // Minimize the per-count negative log-likelihood so the gradient tolerance
  // does not depend on the brightness of the data set.
  const double scale = 1.0 / model.total_counts();
  auto objective = [&](const Params& x) { return -scale * model.value(x); };
  auto gradient = [&](const Params& x) -> Params { return -scale * model.gradient(x); };

  Params x = CholeskyLikelihood::params_from_density(start);
  double fx = objective(x);
  Params g = gradient(x);
  Hessian h = Hessian::Identity();
  bool scaled = false;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (g.norm() < options.gradient_tolerance) {
      converged = true;
      break;
    }
    Params d = -h * g;
    if (d.dot(g) >= 0.0) {
      h.setIdentity();
      d = -g;
    }
    // Backtracking line search with the Armijo condition.
    double step = 1.0;
    bool accepted = false;
    Params xn;
    double fn = 0.0;
    const double slope = d.dot(g);
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * d;
      fn = objective(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (h.isIdentity()) break;
      h.setIdentity();
      continue;
    }
    const Params gn = gradient(xn);
    const Params s = xn - x;
    const Params y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (!scaled) {
        h = Hessian::Identity() * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Hessian left = Hessian::Identity() - rho * s * y.transpose();
      h = left * h * left.transpose() + rho * s * s.transpose();
    }
    x = xn;
    fx = fn;
    g = gn;
  }

  Matrix4c rho = CholeskyLikelihood::density(x);
  TomographyResult result{TwoQubitState(l, rho)};
  result.fidelity = fidelity(result.rho_hat);
  result.log_likelihood = log_likelihood(result.rho_hat.rho(), records);
  result.converged = converged;
  result.iterations = iter;
  result.gradient_norm = g.norm();
  return result;
}

double fidelity(const Matrix4c& rho) {
  const Vector4c phi = entangled_target_vector();
  return (phi.adjoint() * rho * phi)(0, 0).real();
}

double fidelity(const TwoQubitState& rho) { return fidelity(rho.rho()); }

double bootstrap_fidelity_error(std::span<const CountRecord> records, int n_resamples, std::uint64_t seed,
                                const MleOptions& options) {
  if (n_resamples < 2) throw Error(ErrorKind::Parameter, "bootstrap needs at least two resamples");
  const Matrix4c centre = mle_reconstruct(records, std::nullopt, options).rho_hat.rho();
  std::vector<double> values(static_cast<std::size_t>(n_resamples), std::numeric_limits<double>::quiet_NaN());

  auto run = [&](int first, int stride) {
    for (int r = first; r < n_resamples; r += stride) {
      std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(r)));
      std::vector<CountRecord> resampled(records.begin(), records.end());
      for (auto& rec : resampled) rec.counts = static_cast<double>(sample_poisson(rec.counts, rng));
      try {
        values[static_cast<std::size_t>(r)] = mle_reconstruct(resampled, centre, options).fidelity;
      } catch (const Error&) {
        // An all-zero resample has no estimate; it is left out of the spread.
      }
    }
  };
  const int workers =
      std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, std::min(8, n_resamples));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(run, t, workers);
    run(0, workers);
  }

  double mean = 0.0;
  int used = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    mean += v;
    ++used;
  }
  if (used < 2) throw Error(ErrorKind::Parameter, "too few usable bootstrap resamples");
  mean /= used;
  double ss = 0.0;
  for (double v : values) {
    if (!std::isnan(v)) ss += (v - mean) * (v - mean);
  }
  return std::sqrt(ss / (used - 1));
}

double calibrate_eta_super(int l, double target_fidelity, NoiseModel noise, double integration_time) {
  const TwoQubitState target = TwoQubitState::entangled(l);
  auto reconstructed = [&](double eta) {
    noise.eta_super = eta;
    const auto records = with_expected_counts(simulate_tomo_counts(target, noise, integration_time, 0));
    return mle_reconstruct(records).fidelity;
  };
  double lo = 1e-3;
  double hi = noise.eta_eigen;
  const double f_lo = reconstructed(lo);
  const double f_hi = reconstructed(hi);
  if (!(f_lo <= target_fidelity && target_fidelity <= f_hi)) {
    throw Error(ErrorKind::Parameter, fmt::format("fidelity {} outside reachable range [{:.4f}, {:.4f}]",
                                                  target_fidelity, f_lo, f_hi));
  }
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (reconstructed(mid) < target_fidelity ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double trace_distance(const Matrix4c& a, const Matrix4c& b) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(hermitian_part(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

Matrix4c random_density_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix4c g;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex{re, im};
    }
  }
  const Matrix4c rho = g * g.adjoint();
  return hermitian_part(rho / rho.trace().real());
}

namespace {

std::array<std::string, 4> basis_labels(int l) {
  const std::string p = fmt::format("+{}", l);
  const std::string m = fmt::format("-{}", l);
  return {p + p, p + m, m + p, m + m};
}

}  // namespace

std::string density_json(const TwoQubitState& rho) {
  nlohmann::ordered_json doc;
  doc["l"] = rho.l();
  doc["basis"] = basis_labels(rho.l());
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < 4; ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int j = 0; j < 4; ++j) {
      row.push_back({{"re", rho.rho()(i, j).real()}, {"im", rho.rho()(i, j).imag()}});
    }
    rows.push_back(row);
  }
  doc["rho"] = rows;
  return doc.dump(2) + "\n";
}

std::string density_csv(const TwoQubitState& rho, bool imaginary) {
  const auto labels = basis_labels(rho.l());
  std::string out = "row";
  for (const auto& s : labels) out += "," + s;
  out += "\n";
  for (int i = 0; i < 4; ++i) {
    out += labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < 4; ++j) {
      const Complex z = rho.rho()(i, j);
      out += fmt::format(",{:.17g}", imaginary ? z.imag() : z.real());
    }
    out += "\n";
  }
  return out;
}

}  // namespace oamlink
