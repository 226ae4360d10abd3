#ifndef TNT_DYNAMICS_HPP
#define TNT_DYNAMICS_HPP

// Twist-and-turn / one-axis-twisting Hamiltonians, exact propagators, and
// assembly of the interferometer state U_2 U_phi U_1 |psi_0>.
//
// Units: chi = 1, so every time is the dimensionless chi*t, and the turning
// rate is J = N / Lambda.

#include "tnt/spin_core.hpp"

#include <memory>
#include <optional>
#include <string>

namespace tnt {

enum class HamiltonianKind { tnt, oat };

struct HamiltonianSpec {
  HamiltonianKind kind = HamiltonianKind::tnt;
  SpinSystem system{1};
  /// Lambda = N chi / J. +infinity is accepted for tnt and gives J = 0.
  double lambda = 2.0;

  static HamiltonianSpec twist_and_turn(const SpinSystem& system, double lambda) {
    return {HamiltonianKind::tnt, system, lambda};
  }
  static HamiltonianSpec one_axis_twisting(const SpinSystem& system) {
    return {HamiltonianKind::oat, system, 0.0};
  }

  /// Rotation rate J in units of chi. Throws for tnt with lambda <= 0.
  double turning_rate() const;
};

/// H = S_z^2 - J S_x (tnt) or S_z^2 (oat).
Operator build_hamiltonian(const HamiltonianSpec& spec);

/// Spectral data of a Hermitian operator for repeated exp(-i t H) use.
/// Degenerate spectra are fine here (OAT is doubly degenerate).
class Evolution {
 public:
  explicit Evolution(const Operator& hermitian);

  Operator unitary(double t) const;
  /// exp(-i t H) v without forming the matrix.
  CVector apply(double t, const CVector& v) const;

  const RVector& energies() const { return values_; }
  const SpinSystem& system() const { return system_; }

 private:
  SpinSystem system_;
  RVector values_;
  CMatrix vectors_;
};

/// exp(-i t H) by spectral decomposition.
Operator propagator(const Operator& hamiltonian, double t);

enum class ReadoutKind { none, echo, asymmetric_echo, pseudo_echo, rotation };

/// The interaction-based readout U_2.
///   none:            U_2 = 1, t2 = 0
///   echo:            U_2 = U_1^dagger(t1)
///   asymmetric_echo: U_2 = U_1^dagger(t2), t2 != t1
///   pseudo_echo:     U_2 = U_1(t2)
///   rotation:        U_2 = exp(-i angle axis.S), a linear readout
struct Readout {
  ReadoutKind kind = ReadoutKind::none;
  double t2 = 0.0;
  std::optional<Rotation> rotation;

  static Readout none() { return {}; }
  static Readout echo(double t1) { return {ReadoutKind::echo, t1, std::nullopt}; }
  static Readout asymmetric_echo(double t2) {
    return {ReadoutKind::asymmetric_echo, t2, std::nullopt};
  }
  static Readout pseudo_echo(double t2) { return {ReadoutKind::pseudo_echo, t2, std::nullopt}; }
  static Readout linear_rotation(const Vec3& axis, double angle) {
    return {ReadoutKind::rotation, 0.0, Rotation{axis, angle}};
  }
  /// U_1^dagger(t2): echo when t2 == t1, asymmetric otherwise.
  static Readout reversal(double t1, double t2) {
    return t2 == t1 ? echo(t1) : asymmetric_echo(t2);
  }
};

std::string to_string(ReadoutKind kind);
ReadoutKind readout_kind_from_string(const std::string& name);

struct ProtocolSpec {
  HamiltonianSpec hamiltonian;
  double t1 = 0.0;
  Readout readout;
  /// Encoded phase; U_phi = exp(-i phi S_n).
  double phi = 0.0;
  /// Unit direction of S_n. Empty: the QFI-optimal direction of U_1|psi_0>.
  std::optional<Vec3> generator_dir;
  BasisSpec measurement = BasisSpec::sx();

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

/// The Hamiltonian, its spectral data and the spin operators for one
/// HamiltonianSpec. Immutable; copies share the underlying data.
class Model {
 public:
  explicit Model(const HamiltonianSpec& spec);

  const HamiltonianSpec& spec() const { return data_->spec; }
  const SpinSystem& system() const { return data_->spec.system; }
  const SpinOperators& spins() const { return data_->spins; }
  const Operator& hamiltonian() const { return data_->hamiltonian; }
  const Evolution& evolution() const { return data_->evolution; }

 private:
  struct Data {
    HamiltonianSpec spec;
    SpinOperators spins;
    Operator hamiltonian;
    Evolution evolution;
  };
  std::shared_ptr<const Data> data_;
};

/// |psi(phi)> and d|psi(phi)>/dphi after the readout, in the S_z basis.
struct EncodedState {
  CVector state;
  CVector derivative;
};

/// U_1|psi_0> and the generator for one protocol, ready to be evaluated at
/// any phase or readout.
class ProtocolRunner {
 public:
  ProtocolRunner(Model model, const ProtocolSpec& spec, const StateVector& psi0);

  const Model& model() const { return model_; }
  const ProtocolSpec& spec() const { return spec_; }
  const StateVector& prepared() const { return prepared_; }
  const Vec3& generator_direction() const { return generator_dir_; }
  const Operator& generator() const { return generator_; }

  /// U_2 as a matrix, for certification.
  Operator readout_operator(const Readout& readout) const;
  Operator readout_operator() const { return readout_operator(spec_.readout); }

  EncodedState encode(double phi, const Readout& readout) const;
  EncodedState encode(double phi) const { return encode(phi, spec_.readout); }

  /// Final state U_2 U_phi U_1 |psi_0>.
  StateVector final_state(double phi) const;

 private:
  CVector apply_readout(const Readout& readout, const CVector& v) const;

  Model model_;
  ProtocolSpec spec_;
  StateVector prepared_;
  Vec3 generator_dir_;
  Operator generator_;
  Evolution phase_;
};

/// QFI-optimal generator direction of a state, sign-fixed so the largest
/// component is positive.
Vec3 optimal_generator_direction(const StateVector& state);

StateVector run_protocol(const ProtocolSpec& spec, const StateVector& psi0);

/// (<S_x>, <S_y>, <S_z>).
Vec3 mean_spin(const StateVector& psi);

/// The min-S_x eigenstate used as |psi_0> throughout.
StateVector initial_state(const SpinSystem& system);

}  // namespace tnt

#endif  // TNT_DYNAMICS_HPP
