#include "tnt/spin_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tnt {

namespace {

constexpr double kHermitianTolerance = 1e-12;
constexpr double kUnitaryTolerance = 1e-10;
constexpr double kNormTolerance = 1e-12;
constexpr double kUnitVectorTolerance = 1e-10;
constexpr double kDegeneracyGap = 1e-10;

void require_unit(const Vec3& v, const char* what) {
  if (!std::isfinite(v.norm()) || std::abs(v.norm() - 1.0) > kUnitVectorTolerance) {
    std::ostringstream msg;
    msg << what << " must be a unit vector (norm " << v.norm() << ")";
    throw std::invalid_argument(msg.str());
  }
}

// Rotates each column so its first largest-magnitude component is real positive.
void fix_phases(CMatrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const double largest = vectors.col(c).cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    while (std::abs(vectors(pivot, c)) < largest - 1e-12) ++pivot;
    const Complex z = vectors(pivot, c);
    vectors.col(c) *= std::conj(z) / std::abs(z);
  }
}

// Size of the largest cluster of eigenvalues closer than kDegeneracyGap.
int largest_cluster(const RVector& sorted_values) {
  int best = 1;
  int run = 1;
  for (Eigen::Index i = 1; i < sorted_values.size(); ++i) {
    run = std::abs(sorted_values(i) - sorted_values(i - 1)) < kDegeneracyGap ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

void require_hermitian(const Operator& op, const char* where) {
  if (op.kind() != OperatorKind::hermitian) {
    throw std::invalid_argument(std::string(where) + ": operator is not tagged Hermitian");
  }
}

}  // namespace

double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

SpinSystem::SpinSystem(int n_atoms) : n_atoms_(n_atoms) {
  if (n_atoms < 1) {
    throw std::invalid_argument("SpinSystem: atom number must be >= 1, got " +
                                std::to_string(n_atoms));
  }
}

Operator::Operator(SpinSystem system, CMatrix matrix, OperatorKind kind)
    : system_(system), matrix_(std::move(matrix)), kind_(kind) {
  const int dim = system_.dim();
  if (matrix_.rows() != dim || matrix_.cols() != dim) {
    throw std::invalid_argument("Operator: matrix is not dim x dim");
  }
  if (kind_ == OperatorKind::hermitian) {
    const double err = max_abs(matrix_ - matrix_.adjoint());
    if (err > kHermitianTolerance) {
      throw std::invalid_argument("Operator: not Hermitian (residual " + std::to_string(err) + ")");
    }
  } else if (kind_ == OperatorKind::unitary) {
    const double err = max_abs(matrix_.adjoint() * matrix_ - CMatrix::Identity(dim, dim));
    if (err > kUnitaryTolerance) {
      throw std::invalid_argument("Operator: not unitary (residual " + std::to_string(err) + ")");
    }
  }
}

Operator Operator::identity(SpinSystem system) {
  return Operator(system, CMatrix::Identity(system.dim(), system.dim()),
                  OperatorKind::unitary);
}

StateVector::StateVector(SpinSystem system, CVector amplitudes)
    : system_(system), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != system_.dim()) {
    throw std::invalid_argument("StateVector: wrong dimension");
  }
  const double norm2 = amplitudes_.squaredNorm();
  if (!(std::abs(norm2 - 1.0) <= kNormTolerance)) {
    throw std::invalid_argument("StateVector: not normalized (|psi|^2 = " +
                                std::to_string(norm2) + ")");
  }
}

StateVector StateVector::normalized(SpinSystem system, CVector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("StateVector: cannot normalize a zero vector");
  }
  return StateVector(system, amplitudes / norm);
}

BasisSpec BasisSpec::rotated(const Vec3& axis, double angle) {
  require_unit(axis, "rotation axis");
  return {BasisLabel::rotated, Rotation{axis, angle}};
}

BasisSpec BasisSpec::along(const Vec3& direction) {
  require_unit(direction, "measurement direction");
  const Vec3 cross = Vec3::UnitZ().cross(direction);
  const double s = cross.norm();
  if (s < 1e-12) {
    return rotated(Vec3::UnitX(), direction.z() > 0 ? 0.0 : std::numbers::pi);
  }
  return rotated(cross / s, std::atan2(s, direction.z()));
}

SpinOperators build_spin_operators(const SpinSystem& system) {
  const int dim = system.dim();
  const double s = system.spin();
  CMatrix raise = CMatrix::Zero(dim, dim);
  CMatrix sz = CMatrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const double m = system.m(k);
    sz(k, k) = m;
    // S_+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>, and m+1 sits at index k-1.
    if (k > 0) raise(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  const CMatrix lower = raise.adjoint();
  CMatrix sx = 0.5 * (raise + lower);
  CMatrix sy = (raise - lower) / Complex(0.0, 2.0);
  return {Operator(system, std::move(sx), OperatorKind::hermitian),
          Operator(system, std::move(sy), OperatorKind::hermitian),
          Operator(system, std::move(sz), OperatorKind::hermitian)};
}

Operator spin_direction(const SpinSystem& system, const Vec3& unit) {
  require_unit(unit, "spin direction");
  const auto ops = build_spin_operators(system);
  CMatrix m = unit.x() * ops.sx.matrix() + unit.y() * ops.sy.matrix() +
              unit.z() * ops.sz.matrix();
  return Operator(system, std::move(m), OperatorKind::hermitian);
}

Operator rotation_operator(const SpinSystem& system, const Vec3& axis,
                           double angle) {
  const Operator generator = spin_direction(system, axis);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(generator.matrix());
  const RVector& w = solver.eigenvalues();
  CVector phases(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    phases(i) = std::polar(1.0, -angle * w(i));
  }
  const CMatrix& v = solver.eigenvectors();
  return Operator(system, v * phases.asDiagonal() * v.adjoint(),
                  OperatorKind::unitary);
}

Eigendecomposition eigenbasis(const Operator& op) {
  require_hermitian(op, "eigenbasis");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenbasis: eigensolver did not converge");
  }
  const int cluster = largest_cluster(solver.eigenvalues());
  if (cluster > 1) {
    throw DegenerateSpectrum("eigenbasis: spectrum has a degenerate eigenvalue of multiplicity " +
                                 std::to_string(cluster),
                             cluster);
  }
  RVector values = solver.eigenvalues().reverse();
  CMatrix vectors = solver.eigenvectors().rowwise().reverse();
  fix_phases(vectors);
  return {std::move(values), Operator(op.system(), std::move(vectors), OperatorKind::unitary)};
}

StateVector min_eigenstate(const Operator& op) {
  require_hermitian(op, "min_eigenstate");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.matrix());
  const RVector& w = solver.eigenvalues();
  int multiplicity = 1;
  while (multiplicity < w.size() && w(multiplicity) - w(0) < kDegeneracyGap) ++multiplicity;
  if (multiplicity > 1) {
    throw DegenerateSpectrum("min_eigenstate: ground space has multiplicity " +
                                 std::to_string(multiplicity),
                             multiplicity);
  }
  CMatrix v = solver.eigenvectors().col(0);
  fix_phases(v);
  return StateVector::normalized(op.system(), v.col(0));
}

StateVector coherent_state(const SpinSystem& system, double theta,
                           double varphi) {
  // exp(i theta S_y)|s,s> = sum_k sqrt(C(N,k)) cos^{N-k}(theta/2) (-sin(theta/2))^k |m = s-k>
  const int n = system.n_atoms();
  const double c = std::cos(0.5 * theta);
  const double s = -std::sin(0.5 * theta);
  const double log_nfact = std::lgamma(n + 1.0);
  CVector amps(system.dim());
  for (int k = 0; k <= n; ++k) {
    const double binom = std::exp(0.5 * (log_nfact - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
    const double magnitude = binom * std::pow(c, n - k) * std::pow(s, k);
    amps(k) = magnitude * std::polar(1.0, varphi * system.m(k));
  }
  return StateVector::normalized(system, std::move(amps));
}

CMatrix basis_matrix(const SpinSystem& system, const BasisSpec& basis) {
  CMatrix b;
  switch (basis.label) {
    case BasisLabel::sz:
      return CMatrix::Identity(system.dim(), system.dim());
    case BasisLabel::sx:
      return eigenbasis(build_spin_operators(system).sx).vectors.matrix();
    case BasisLabel::rotated:
      if (!basis.rotation) throw std::invalid_argument("rotated basis without a rotation");
      b = rotation_operator(system, basis.rotation->axis, basis.rotation->angle).matrix();
      break;
  }
  const double err = max_abs(b.adjoint() * b - CMatrix::Identity(system.dim(), system.dim()));
  if (err > 1e-10) {
    throw std::runtime_error("basis_matrix: columns not orthonormal (residual " +
                             std::to_string(err) + ")");
  }
  return b;
}

Operator parity_operator(const SpinSystem& system, const BasisSpec& basis) {
  const CMatrix b = basis_matrix(system, basis);
  RVector signs(system.dim());
  for (int k = 0; k < system.dim(); ++k) signs(k) = (k % 2 == 0) ? 1.0 : -1.0;
  CMatrix pi = b * signs.cast<Complex>().asDiagonal() * b.adjoint();
  // Symmetrize away rounding so the Hermitian tag holds exactly.
  pi = 0.5 * (pi + pi.adjoint()).eval();
  return Operator(system, std::move(pi), OperatorKind::hermitian);
}

SpinMoments spin_moments(const StateVector& state) {
  const SpinSystem& sys = state.system();
  const CVector& psi = state.amplitudes();
  const int dim = sys.dim();
  const double s = sys.spin();
  // Apply S_x, S_y, S_z through the ladder coefficients directly.
  CVector up = CVector::Zero(dim);    // S_+ psi
  CVector down = CVector::Zero(dim);  // S_- psi
  CVector z(dim);
  for (int k = 0; k < dim; ++k) {
    const double m = sys.m(k);
    z(k) = m * psi(k);
    if (k > 0) up(k - 1) = std::sqrt(s * (s + 1) - m * (m + 1)) * psi(k);
    if (k + 1 < dim) down(k + 1) = std::sqrt(s * (s + 1) - m * (m - 1)) * psi(k);
  }
  const std::array<CVector, 3> applied = {0.5 * (up + down),
                                          (up - down) / Complex(0.0, 2.0), z};
  SpinMoments out;
  for (int i = 0; i < 3; ++i) out.mean(i) = psi.dot(applied[i]).real();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      out.covariance(i, j) = applied[i].dot(applied[j]).real() - out.mean(i) * out.mean(j);
    }
  }
  return out;
}

VarianceAxis max_variance_axis(const StateVector& state) {
  const SpinMoments mom = spin_moments(state);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(mom.covariance);
  Vec3 dir = solver.eigenvectors().col(2);
  const double largest = dir.cwiseAbs().maxCoeff();
  int pivot = 0;
  while (std::abs(dir(pivot)) < largest - 1e-12) ++pivot;
  if (dir(pivot) < 0) dir = -dir;
  return {std::max(solver.eigenvalues()(2), 0.0), dir.normalized()};
}

ParityReport check_parity_conditions(const StateVector& state,
                                     const Operator& generator,
                                     const Operator& readout,
                                     const BasisSpec& basis) {
  const SpinSystem& sys = state.system();
  if (!(generator.system() == sys) || !(readout.system() == sys)) {
    throw std::invalid_argument("check_parity_conditions: mismatched spin systems");
  }
  const CMatrix pi = parity_operator(sys, basis).matrix();
  const CVector& psi = state.amplitudes();
  const CVector flipped = pi * psi;

  ParityReport report{};
  report.state_parity.residual = std::min((flipped - psi).norm(), (flipped + psi).norm());
  report.generator_flip.residual = max_abs(pi * generator.matrix() * pi + generator.matrix());
  report.readout_conserves.residual = max_abs(readout.matrix() * pi - pi * readout.matrix());
  for (ParityCheck* c : {&report.state_parity, &report.generator_flip, &report.readout_conserves}) {
    c->holds = c->residual <= kParityTolerance;
  }
  return report;
}

}  // namespace tnt
