#include "tnt/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tnt {

void NoiseModel::validate() const {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw std::invalid_argument("noise sigma must be finite and >= 0, got " +
                                std::to_string(sigma));
  }
}

ProbDist::ProbDist(double spin, RVector probs, double noise_sigma)
    : spin_(spin), probs_(std::move(probs)), noise_sigma_(noise_sigma) {
  if (probs_.size() != static_cast<Eigen::Index>(std::lround(2 * spin)) + 1) {
    throw std::invalid_argument("ProbDist: expected 2s+1 outcomes");
  }
  for (Eigen::Index k = 0; k < probs_.size(); ++k) {
    if (!std::isfinite(probs_(k)) || probs_(k) < -1e-14) {
      throw std::invalid_argument("ProbDist: negative or non-finite probability");
    }
    probs_(k) = std::max(probs_(k), 0.0);
  }
  const double total = probs_.sum();
  if (std::abs(total - 1.0) > 1e-10) {
    throw std::invalid_argument("ProbDist: probabilities sum to " + std::to_string(total));
  }
}

NoiseKernel::NoiseKernel(int dim, double sigma) : sigma_(sigma) {
  NoiseModel{sigma}.validate();
  if (sigma < kNoisePassthrough) return;
  weights_.resize(dim, dim);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int col = 0; col < dim; ++col) {
    for (int row = 0; row < dim; ++row) {
      const double d = row - col;
      weights_(row, col) = std::exp(-d * d * inv);
    }
    weights_.col(col) /= weights_.col(col).sum();
  }
}

RVector NoiseKernel::apply(const RVector& p) const {
  if (passthrough()) return p;
  return weights_ * p;
}

RVector outcome_probs(const CMatrix& basis, const CVector& state) {
  return (basis.adjoint() * state).cwiseAbs2();
}

ProbDist measurement_probs(const StateVector& psi, const BasisSpec& basis) {
  const SpinSystem& sys = psi.system();
  return ProbDist(sys.spin(), outcome_probs(basis_matrix(sys, basis), psi.amplitudes()));
}

ProbDist convolve_noise(const ProbDist& p, const NoiseModel& noise) {
  const NoiseKernel kernel(p.size(), noise.sigma);
  return ProbDist(p.spin(), kernel.apply(p.probs()), noise.sigma);
}

double fisher_sum(const RVector& p, const RVector& dp) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) >= kProbabilityFloor) total += dp(k) * dp(k) / p(k);
  }
  return total;
}

namespace {

// An outcome with amplitude ~ phi d_k carries 4 |d_k|^2 of Fisher information
// in the limit phi -> 0, whatever the (tiny) probability; that is what the
// floor throws away.
void account_dropped(FisherResult& out, const RVector& p, const RVector& slope_weight) {
  double lost = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) < kProbabilityFloor) {
      ++out.dropped_terms;
      lost += 4.0 * slope_weight(k);
    }
  }
  out.dropped_mass = lost > 0.0 ? lost / (out.value + lost) : 0.0;
}

}  // namespace

FisherResult fisher_from_amplitudes(const CVector& amp, const CVector& damp,
                                    const NoiseKernel& kernel) {
  // dP_m/dphi = 2 Re(conj(<m|psi>) <m|dpsi>)
  const RVector p = kernel.apply(amp.cwiseAbs2());
  const RVector dp = kernel.apply(2.0 * (amp.conjugate().cwiseProduct(damp)).real());

  FisherResult out;
  out.method = FisherMethod::analytic;
  out.value = fisher_sum(p, dp);
  if ((p.array() < kProbabilityFloor).any()) account_dropped(out, p, kernel.apply(damp.cwiseAbs2()));
  return out;
}

FisherResult analytic_fisher(const EncodedState& encoded, const CMatrix& basis,
                             const NoiseKernel& kernel) {
  return fisher_from_amplitudes(basis.adjoint() * encoded.state,
                                basis.adjoint() * encoded.derivative, kernel);
}

namespace {

FisherResult finite_difference_fisher(const ProtocolRunner& runner, const CMatrix& basis,
                                      const NoiseKernel& kernel, double phi) {
  const double h = kFiniteDifferenceStep;
  const RVector p = kernel.apply(outcome_probs(basis, runner.encode(phi).state));
  const RVector plus = kernel.apply(outcome_probs(basis, runner.encode(phi + h).state));
  const RVector minus = kernel.apply(outcome_probs(basis, runner.encode(phi - h).state));
  const RVector dp = (plus - minus) / (2.0 * h);

  FisherResult out;
  out.phi_eval = phi;
  out.method = FisherMethod::finite_difference;
  out.value = fisher_sum(p, dp);
  if ((p.array() < kProbabilityFloor).any()) {
    const CVector damp = basis.adjoint() * runner.encode(phi).derivative;
    account_dropped(out, p, kernel.apply(damp.cwiseAbs2()));
  }
  return out;
}

}  // namespace

FisherResult classical_fisher(const ProtocolRunner& runner, const CMatrix& basis,
                              const NoiseKernel& kernel, double phi_eval,
                              FisherMethod method) {
  if (method == FisherMethod::finite_difference) {
    return finite_difference_fisher(runner, basis, kernel, phi_eval);
  }
  FisherResult out = analytic_fisher(runner.encode(phi_eval), basis, kernel);
  out.phi_eval = phi_eval;
  return out;
}

FisherResult cfi(const ProtocolSpec& spec, const StateVector& psi0, const NoiseModel& noise,
                 double phi_eval, FisherMethod method) {
  noise.validate();
  const ProtocolRunner runner(Model(spec.hamiltonian), spec, psi0);
  const SpinSystem& sys = runner.model().system();
  return classical_fisher(runner, basis_matrix(sys, spec.measurement),
                          NoiseKernel(sys.dim(), noise.sigma), phi_eval, method);
}

QfiResult qfi_pure(const StateVector& psi) {
  const VarianceAxis axis = max_variance_axis(psi);
  return {4.0 * axis.variance, axis.direction};
}

SqueezingResult squeezing_gain(const StateVector& psi) {
  const SpinMoments mom = spin_moments(psi);
  const double length = mom.mean.norm();
  if (length <= 1e-9) {
    throw std::domain_error("squeezing parameter undefined: mean spin vanishes");
  }
  const Vec3 n = mom.mean / length;
  // Transverse frame: start from the coordinate axis least aligned with n.
  Eigen::Index least = 0;
  n.cwiseAbs().minCoeff(&least);
  Vec3 a = Vec3::Unit(least);
  a = (a - a.dot(n) * n).normalized();
  const Vec3 b = n.cross(a);
  Eigen::Matrix<double, 2, 3> frame;
  frame.row(0) = a.transpose();
  frame.row(1) = b.transpose();
  const Eigen::Matrix2d transverse = frame * mom.covariance * frame.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(transverse);
  const double var_min = solver.eigenvalues()(0);
  const Eigen::Vector2d v = solver.eigenvectors().col(0);

  SqueezingResult out;
  out.xi2 = psi.system().n_atoms() * var_min / (length * length);
  if (!(out.xi2 > 0.0)) {
    throw std::domain_error("squeezing parameter is not positive");
  }
  out.gain = 1.0 / out.xi2;
  out.direction = (v(0) * a + v(1) * b).normalized();
  return out;
}

double hellinger(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size() || p.spin() != q.spin()) {
    throw std::invalid_argument("hellinger: outcome grids differ");
  }
  // 1 - sum sqrt(pq) = 1/2 sum (sqrt p - sqrt q)^2 + 1 - (sum p + sum q)/2,
  // which avoids cancellation for nearby distributions.
  const RVector sp = p.probs().cwiseSqrt();
  const RVector sq = q.probs().cwiseSqrt();
  const double d2 = 0.5 * (sp - sq).squaredNorm() + 1.0 -
                    0.5 * (p.probs().sum() + q.probs().sum());
  return std::clamp(d2, 0.0, 1.0);
}

ProbDist protocol_distribution(const ProtocolRunner& runner, const CMatrix& basis,
                               const NoiseKernel& kernel, double phi) {
  const SpinSystem& sys = runner.model().system();
  return ProbDist(sys.spin(), kernel.apply(outcome_probs(basis, runner.encode(phi).state)),
                  kernel.sigma());
}

double hellinger_cfi_estimate(const ProtocolSpec& spec, const StateVector& psi0,
                              const NoiseModel& noise, double dphi) {
  if (!(dphi > 0.0)) throw std::invalid_argument("hellinger_cfi_estimate: dphi must be > 0");
  noise.validate();
  const ProtocolRunner runner(Model(spec.hamiltonian), spec, psi0);
  const SpinSystem& sys = runner.model().system();
  const CMatrix basis = basis_matrix(sys, spec.measurement);
  const NoiseKernel kernel(sys.dim(), noise.sigma);
  const double d2 = hellinger(protocol_distribution(runner, basis, kernel, 0.0),
                              protocol_distribution(runner, basis, kernel, dphi));
  return 8.0 * d2 / (dphi * dphi);
}

}  // namespace tnt
