#ifndef TNT_SPIN_CORE_HPP
#define TNT_SPIN_CORE_HPP

// Collective-spin algebra on the symmetric (Dicke) subspace of N two-level
// atoms. Amplitudes are indexed k = 0..N, corresponding to S_z eigenvalues
// m = s, s-1, ..., -s (descending).

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace tnt {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

/// Thrown when an eigenproblem that must be non-degenerate is not.
class DegenerateSpectrum : public std::runtime_error {
 public:
  DegenerateSpectrum(const std::string& what, int multiplicity)
      : std::runtime_error(what), multiplicity_(multiplicity) {}
  int multiplicity() const { return multiplicity_; }

 private:
  int multiplicity_;
};

class SpinSystem {
 public:
  explicit SpinSystem(int n_atoms);

  int n_atoms() const { return n_atoms_; }
  double spin() const { return 0.5 * n_atoms_; }
  int dim() const { return n_atoms_ + 1; }
  /// S_z eigenvalue at ladder index k.
  double m(int k) const { return spin() - k; }

  bool operator==(const SpinSystem&) const = default;

 private:
  int n_atoms_;
};

enum class OperatorKind { hermitian, unitary, general };

/// Dense operator on the Dicke ladder. The kind tag is checked on
/// construction: Hermitian to 1e-12, unitary to 1e-10 (max-norm).
class Operator {
 public:
  Operator(SpinSystem system, CMatrix matrix, OperatorKind kind);

  static Operator identity(SpinSystem system);

  const SpinSystem& system() const { return system_; }
  const CMatrix& matrix() const { return matrix_; }
  OperatorKind kind() const { return kind_; }

 private:
  SpinSystem system_;
  CMatrix matrix_;
  OperatorKind kind_;
};

/// Normalized pure state (norm checked to 1e-12).
class StateVector {
 public:
  StateVector(SpinSystem system, CVector amplitudes);

  /// Rescales `amplitudes` to unit norm before constructing.
  static StateVector normalized(SpinSystem system, CVector amplitudes);

  const SpinSystem& system() const { return system_; }
  const CVector& amplitudes() const { return amplitudes_; }

 private:
  SpinSystem system_;
  CVector amplitudes_;
};

struct Rotation {
  Vec3 axis;     // unit
  double angle;  // radians
};

enum class BasisLabel { sx, sz, rotated };

/// Measurement basis. `rotated` applies exp(-i angle axis.S) to the S_z
/// eigenbasis, so basis state k is the eigenstate of (R z).S with eigenvalue
/// s - k.
struct BasisSpec {
  BasisLabel label = BasisLabel::sz;
  std::optional<Rotation> rotation;

  static BasisSpec sx() { return {BasisLabel::sx, std::nullopt}; }
  static BasisSpec sz() { return {BasisLabel::sz, std::nullopt}; }
  static BasisSpec rotated(const Vec3& axis, double angle);
  /// Eigenbasis of d.S for a unit direction d, descending eigenvalue.
  static BasisSpec along(const Vec3& direction);
};

struct SpinOperators {
  Operator sx;
  Operator sy;
  Operator sz;
};

SpinOperators build_spin_operators(const SpinSystem& system);

/// S_n = n_x S_x + n_y S_y + n_z S_z; `unit` must have norm 1 within 1e-10.
Operator spin_direction(const SpinSystem& system, const Vec3& unit);

/// exp(-i angle axis.S) for a unit axis.
Operator rotation_operator(const SpinSystem& system, const Vec3& axis,
                           double angle);

struct Eigendecomposition {
  RVector values;    // descending
  Operator vectors;  // columns are eigenvectors, unitary
};

/// Non-degenerate Hermitian eigenproblem with deterministic ordering and
/// phases: eigenvalues descending; each eigenvector's first component of
/// largest magnitude is made real positive. Throws DegenerateSpectrum if two
/// eigenvalues lie within 1e-10 of each other.
Eigendecomposition eigenbasis(const Operator& op);

/// Eigenvector of the smallest eigenvalue. Throws DegenerateSpectrum when the
/// lowest eigenvalue is not simple.
StateVector min_eigenstate(const Operator& op);

/// |theta, varphi> = exp(i varphi S_z) exp(i theta S_y) |S_z = N/2>.
/// (pi/2, 0) lands on the S_x = -N/2 eigenstate.
StateVector coherent_state(const SpinSystem& system, double theta,
                           double varphi);

/// Columns are the basis states of `basis`, ordered by descending eigenvalue.
CMatrix basis_matrix(const SpinSystem& system, const BasisSpec& basis);

/// sum_k (-1)^k |b_k><b_k| over the basis ordering.
Operator parity_operator(const SpinSystem& system, const BasisSpec& basis);

struct SpinMoments {
  Vec3 mean;        // <S_x>, <S_y>, <S_z>
  Eigen::Matrix3d covariance;  // 1/2<S_i S_j + S_j S_i> - <S_i><S_j>
};

SpinMoments spin_moments(const StateVector& state);

/// Direction of largest spin variance (principal axis of the covariance
/// matrix). The direction is sign-fixed: its first largest-magnitude
/// component is positive.
struct VarianceAxis {
  double variance;
  Vec3 direction;
};

VarianceAxis max_variance_axis(const StateVector& state);

struct ParityCheck {
  bool holds;
  double residual;
};

struct ParityReport {
  ParityCheck state_parity;      // Pi|psi> = +-|psi>
  ParityCheck generator_flip;    // Pi S_n Pi = -S_n
  ParityCheck readout_conserves; // [U_2, Pi] = 0
  bool all() const {
    return state_parity.holds && generator_flip.holds &&
           readout_conserves.holds;
  }
};

inline constexpr double kParityTolerance = 1e-9;

ParityReport check_parity_conditions(const StateVector& state,
                                     const Operator& generator,
                                     const Operator& readout,
                                     const BasisSpec& basis);

double max_abs(const CMatrix& m);

}  // namespace tnt

#endif  // TNT_SPIN_CORE_HPP
