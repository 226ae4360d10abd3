#include "tnt/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace tnt {

double HamiltonianSpec::turning_rate() const {
  if (kind == HamiltonianKind::oat) return 0.0;
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("twist-and-turn Hamiltonian needs Lambda > 0, got " +
                                std::to_string(lambda));
  }
  return std::isinf(lambda) ? 0.0 : system.n_atoms() / lambda;
}

Operator build_hamiltonian(const HamiltonianSpec& spec) {
  const double j = spec.turning_rate();
  const SpinOperators s = build_spin_operators(spec.system);
  CMatrix h = s.sz.matrix() * s.sz.matrix();
  if (j != 0.0) h -= j * s.sx.matrix();
  return Operator(spec.system, std::move(h), OperatorKind::hermitian);
}

Evolution::Evolution(const Operator& hermitian) : system_(hermitian.system()) {
  if (hermitian.kind() != OperatorKind::hermitian) {
    throw std::invalid_argument("Evolution: generator must be Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian.matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("Evolution: eigensolver did not converge");
  }
  values_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

namespace {

CVector phases(const RVector& energies, double t) {
  CVector out(energies.size());
  for (Eigen::Index i = 0; i < energies.size(); ++i) out(i) = std::polar(1.0, -t * energies(i));
  return out;
}

}  // namespace

Operator Evolution::unitary(double t) const {
  if (t == 0.0) return Operator::identity(system_);
  return Operator(system_, vectors_ * phases(values_, t).asDiagonal() * vectors_.adjoint(),
                  OperatorKind::unitary);
}

CVector Evolution::apply(double t, const CVector& v) const {
  if (t == 0.0) return v;
  const CVector coeffs = vectors_.adjoint() * v;
  return vectors_ * phases(values_, t).cwiseProduct(coeffs);
}

Operator propagator(const Operator& hamiltonian, double t) {
  return Evolution(hamiltonian).unitary(t);
}

std::string to_string(ReadoutKind kind) {
  switch (kind) {
    case ReadoutKind::none: return "none";
    case ReadoutKind::echo: return "echo";
    case ReadoutKind::asymmetric_echo: return "asymmetric_echo";
    case ReadoutKind::pseudo_echo: return "pseudo_echo";
    case ReadoutKind::rotation: return "rotation";
  }
  return "unknown";
}

ReadoutKind readout_kind_from_string(const std::string& name) {
  for (ReadoutKind k : {ReadoutKind::none, ReadoutKind::echo, ReadoutKind::asymmetric_echo,
                        ReadoutKind::pseudo_echo, ReadoutKind::rotation}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown readout kind '" + name + "'");
}

void ProtocolSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("protocol: " + msg); };
  hamiltonian.turning_rate();
  if (!std::isfinite(t1) || t1 < 0.0) fail("t1 must be finite and >= 0");
  if (!std::isfinite(phi)) fail("phi must be finite");
  const double t2 = readout.t2;
  if (!std::isfinite(t2) || t2 < 0.0) fail("t2 must be finite and >= 0");
  switch (readout.kind) {
    case ReadoutKind::none:
      if (t2 != 0.0) fail("readout 'none' requires t2 = 0");
      break;
    case ReadoutKind::echo:
      if (t2 != t1) fail("echo readout requires t2 = t1");
      break;
    case ReadoutKind::asymmetric_echo:
      if (t2 == t1) fail("asymmetric echo requires t2 != t1");
      break;
    case ReadoutKind::pseudo_echo:
      break;
    case ReadoutKind::rotation:
      if (!readout.rotation) fail("rotation readout without a rotation");
      if (std::abs(readout.rotation->axis.norm() - 1.0) > 1e-10) fail("rotation axis must be unit");
      break;
  }
  if (generator_dir && std::abs(generator_dir->norm() - 1.0) > 1e-10) {
    fail("generator direction must be a unit vector");
  }
  if (measurement.label == BasisLabel::rotated && !measurement.rotation) {
    fail("rotated measurement basis without a rotation");
  }
}

Model::Model(const HamiltonianSpec& spec) {
  Operator h = build_hamiltonian(spec);
  Evolution evo(h);
  data_ = std::make_shared<const Data>(
      Data{spec, build_spin_operators(spec.system), std::move(h), std::move(evo)});
}

Vec3 optimal_generator_direction(const StateVector& state) {
  return max_variance_axis(state).direction;
}

namespace {

const ProtocolSpec& checked(const Model& model, const ProtocolSpec& spec,
                           const StateVector& psi0) {
  spec.validate();
  if (!(psi0.system() == model.system()) || !(spec.hamiltonian.system == model.system())) {
    throw std::invalid_argument("ProtocolRunner: spin system mismatch");
  }
  if (spec.hamiltonian.kind != model.spec().kind ||
      spec.hamiltonian.turning_rate() != model.spec().turning_rate()) {
    throw std::invalid_argument("ProtocolRunner: protocol Hamiltonian differs from the model");
  }
  return spec;
}

Vec3 resolve_generator(const ProtocolSpec& spec, const StateVector& prepared) {
  return spec.generator_dir ? *spec.generator_dir : optimal_generator_direction(prepared);
}

}  // namespace

ProtocolRunner::ProtocolRunner(Model model, const ProtocolSpec& spec, const StateVector& psi0)
    : model_(std::move(model)),
      spec_(checked(model_, spec, psi0)),
      prepared_(model_.system(), model_.evolution().apply(spec.t1, psi0.amplitudes())),
      generator_dir_(resolve_generator(spec, prepared_)),
      generator_(spin_direction(model_.system(), generator_dir_)),
      phase_(generator_) {}

Operator ProtocolRunner::readout_operator(const Readout& readout) const {
  const SpinSystem& sys = model_.system();
  switch (readout.kind) {
    case ReadoutKind::none: return Operator::identity(sys);
    case ReadoutKind::echo:
    case ReadoutKind::asymmetric_echo: return model_.evolution().unitary(-readout.t2);
    case ReadoutKind::pseudo_echo: return model_.evolution().unitary(readout.t2);
    case ReadoutKind::rotation:
      return rotation_operator(sys, readout.rotation->axis, readout.rotation->angle);
  }
  throw std::logic_error("unhandled readout kind");
}

CVector ProtocolRunner::apply_readout(const Readout& readout, const CVector& v) const {
  switch (readout.kind) {
    case ReadoutKind::none: return v;
    case ReadoutKind::echo:
    case ReadoutKind::asymmetric_echo: return model_.evolution().apply(-readout.t2, v);
    case ReadoutKind::pseudo_echo: return model_.evolution().apply(readout.t2, v);
    case ReadoutKind::rotation: return readout_operator(readout).matrix() * v;
  }
  throw std::logic_error("unhandled readout kind");
}

EncodedState ProtocolRunner::encode(double phi, const Readout& readout) const {
  const CVector encoded = phase_.apply(phi, prepared_.amplitudes());
  // d/dphi exp(-i phi S_n) = -i S_n exp(-i phi S_n)
  const CVector slope = Complex(0.0, -1.0) * (generator_.matrix() * encoded);
  return {apply_readout(readout, encoded), apply_readout(readout, slope)};
}

StateVector ProtocolRunner::final_state(double phi) const {
  return StateVector(model_.system(), encode(phi).state);
}

StateVector run_protocol(const ProtocolSpec& spec, const StateVector& psi0) {
  return ProtocolRunner(Model(spec.hamiltonian), spec, psi0).final_state(spec.phi);
}

Vec3 mean_spin(const StateVector& psi) { return spin_moments(psi).mean; }

StateVector initial_state(const SpinSystem& system) {
  return min_eigenstate(build_spin_operators(system).sx);
}

}  // namespace tnt
