#include "tnt/optimizer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tnt {

namespace {

constexpr double kPi = std::numbers::pi;

bool clearly_better(double candidate, double best) {
  return candidate > best + 1e-12 + 1e-9 * std::abs(best);
}

// Unit vector along v with its component along `normal` removed; falls back
// to any direction perpendicular to `normal` when v is (anti)parallel to it.
Vec3 perpendicular_part(const Vec3& v, const Vec3& normal) {
  Vec3 p = v - v.dot(normal) * normal;
  if (p.norm() > 1e-8) return p.normalized();
  Eigen::Index least = 0;
  normal.cwiseAbs().minCoeff(&least);
  p = Vec3::Unit(least);
  return (p - p.dot(normal) * normal).normalized();
}

double wrap_half_turn(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  return t;
}

}  // namespace

void BasisSearchSpec::validate() const {
  if (grid < 8) throw std::invalid_argument("basis search grid must be >= 8");
  if (refine_iterations < 0) throw std::invalid_argument("refine iterations must be >= 0");
  if (!(tolerance > 0.0)) throw std::invalid_argument("basis search tolerance must be > 0");
}

Vec3 SearchPlane::direction(double theta) const {
  return std::cos(theta) * a + std::sin(theta) * b;
}

std::array<SearchPlane, 2> search_planes(const Vec3& generator_dir) {
  const Vec3 n = generator_dir.normalized();
  const Vec3 x = Vec3::UnitX();
  // Plane normal to S_n, starting at S_x.
  const Vec3 a0 = perpendicular_part(x, n);
  const SearchPlane normal_to_n{a0, n.cross(a0)};
  // Plane normal to S_x, starting at S_n.
  const Vec3 a1 = perpendicular_part(n, x);
  const SearchPlane normal_to_x{a1, x.cross(a1)};
  return {normal_to_n, normal_to_x};
}

PlaneBasis::PlaneBasis(const SpinSystem& system, const SearchPlane& plane) : plane_(plane) {
  const Vec3 c = plane.a.cross(plane.b);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(spin_direction(system, c.normalized()).matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("PlaneBasis: eigensolver did not converge");
  }
  axis_values_ = solver.eigenvalues();
  axis_vectors_ = solver.eigenvectors();
  start_in_axis_frame_ =
      basis_matrix(system, BasisSpec::along(plane.a)).adjoint() * axis_vectors_;
}

CMatrix PlaneBasis::amplitudes(double theta, const CMatrix& axis_frame_states) const {
  // Basis at theta is exp(-i theta c.S) V_a, so amplitudes are
  // V_a^dagger W exp(+i theta mu) W^dagger psi.
  CVector phases(axis_values_.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::polar(1.0, theta * axis_values_(i));
  }
  return start_in_axis_frame_ * (phases.asDiagonal() * axis_frame_states);
}

CMatrix PlaneBasis::basis(double theta) const {
  CVector phases(axis_values_.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::polar(1.0, -theta * axis_values_(i));
  }
  return axis_vectors_ * phases.asDiagonal() * start_in_axis_frame_.adjoint();
}

BasisOptimizer::BasisOptimizer(const SpinSystem& system, const Vec3& generator_dir)
    : planes_{PlaneBasis(system, search_planes(generator_dir)[0]),
              PlaneBasis(system, search_planes(generator_dir)[1])} {}

BasisOptimizer::Prepared BasisOptimizer::prepare(const EncodedState& encoded) const {
  Prepared out;
  for (int i = 0; i < 2; ++i) {
    out.state[i] = planes_[i].to_axis_frame(encoded.state);
    out.derivative[i] = planes_[i].to_axis_frame(encoded.derivative);
  }
  return out;
}

double BasisOptimizer::fisher(int plane, double theta, const Prepared& prepared,
                              const NoiseKernel& kernel) const {
  const PlaneBasis& pb = planes_[plane];
  const CVector& x = prepared.state[plane];
  Eigen::MatrixX2cd both(x.size(), 2);
  both.col(0) = x;
  both.col(1) = prepared.derivative[plane];
  const Eigen::MatrixX2cd amps = pb.amplitudes(theta, both);
  return fisher_from_amplitudes(amps.col(0), amps.col(1), kernel).value;
}

PlaneOptimum BasisOptimizer::optimize_plane(int plane, const Prepared& prepared,
                                            const NoiseKernel& kernel,
                                            const BasisSearchSpec& search,
                                            Execution exec) const {
  const double step = kPi / search.grid;
  std::vector<double> values(search.grid);
  for_each_index(search.grid, exec,
                 [&](int i) { values[i] = fisher(plane, i * step, prepared, kernel); });

  int best = 0;
  for (int i = 1; i < search.grid; ++i) {
    if (clearly_better(values[i], values[best])) best = i;
  }
  PlaneOptimum out{planes_[plane].plane(), best * step, values[best]};
  if (search.refine_iterations == 0) return out;

  auto f = [&](double theta) { return fisher(plane, theta, prepared, kernel); };
  const double centre = best * step;
  const double theta = golden_section_maximize(f, centre - step, centre + step,
                                               search.refine_iterations, search.tolerance);
  const double value = f(theta);
  if (clearly_better(value, out.fc)) {
    out.angle = wrap_half_turn(theta);
    out.fc = value;
  }
  return out;
}

BasisOptimum BasisOptimizer::optimize(const Prepared& prepared, const NoiseKernel& kernel,
                                      const BasisSearchSpec& search, Execution exec) const {
  search.validate();
  BasisOptimum out;
  for (int i = 0; i < 2; ++i) out.planes[i] = optimize_plane(i, prepared, kernel, search, exec);
  out.winner = clearly_better(out.planes[1].fc, out.planes[0].fc) ? 1 : 0;
  const PlaneOptimum& win = out.planes[out.winner];
  out.fc = win.fc;
  out.direction = win.direction().normalized();
  out.basis = BasisSpec::along(out.direction);
  return out;
}

BasisOptimum optimize_basis(const ProtocolSpec& spec, const StateVector& psi0,
                            const NoiseModel& noise, const BasisSearchSpec& search,
                            double phi_eval) {
  noise.validate();
  search.validate();
  const ProtocolRunner runner(Model(spec.hamiltonian), spec, psi0);
  const SpinSystem& sys = runner.model().system();
  const BasisOptimizer optimizer(sys, runner.generator_direction());
  return optimizer.optimize(optimizer.prepare(runner.encode(phi_eval)),
                            NoiseKernel(sys.dim(), noise.sigma), search);
}

std::string to_string(BasisMode mode) {
  return mode == BasisMode::fixed_sx ? "fixed" : "optimized";
}

BasisMode basis_mode_from_string(const std::string& name) {
  if (name == "fixed" || name == "fixed_sx") return BasisMode::fixed_sx;
  if (name == "optimized") return BasisMode::optimized;
  throw std::invalid_argument("unknown basis mode '" + name + "' (expected fixed|optimized)");
}

std::vector<double> SweepSettings::default_asymmetric_ratios() {
  return linear_grid(1.0, 2.0, 0.1);
}

const SweepSeries& SweepResult::at(const std::string& name) const {
  for (const SweepSeries& s : series) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("sweep has no series '" + name + "'");
}

std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start) {
    throw std::invalid_argument("linear_grid: need finite start <= stop and step > 0");
  }
  const long count = static_cast<long>(std::floor((stop - start) / step + 1e-6)) + 1;
  std::vector<double> out(count);
  for (long i = 0; i < count; ++i) out[i] = start + i * step;
  return out;
}

std::optional<double> snl_crossing(const std::vector<double>& axis,
                                   const std::vector<double>& fc, double snl) {
  if (axis.size() != fc.size()) throw std::invalid_argument("snl_crossing: size mismatch");
  if (axis.empty()) return std::nullopt;
  if (fc[0] < snl) return axis[0];
  for (std::size_t i = 1; i < fc.size(); ++i) {
    if (fc[i] < snl) {
      const double frac = (fc[i - 1] - snl) / (fc[i - 1] - fc[i]);
      return axis[i - 1] + frac * (axis[i] - axis[i - 1]);
    }
  }
  return std::nullopt;
}

namespace {

void validate(const SweepSettings& s) {
  if (s.n_atoms < 1) throw std::invalid_argument("sweep: N must be >= 1");
  if (!std::isfinite(s.phi_eval)) throw std::invalid_argument("sweep: phi_eval must be finite");
  s.search.validate();
}

HamiltonianSpec hamiltonian_of(const SweepSettings& s) {
  return HamiltonianSpec::twist_and_turn(SpinSystem(s.n_atoms), s.lambda);
}

ProtocolSpec base_protocol(const SweepSettings& s, double t1) {
  ProtocolSpec spec;
  spec.hamiltonian = hamiltonian_of(s);
  spec.t1 = t1;
  spec.phi = s.phi_eval;
  return spec;
}

SweepResult blank_result(const SweepSettings& s, std::string axis_name,
                         std::vector<double> axis) {
  SweepResult out;
  out.axis_name = std::move(axis_name);
  out.axis = std::move(axis);
  out.snl = s.n_atoms;
  out.n_atoms = s.n_atoms;
  out.lambda = s.lambda;
  out.phi_eval = s.phi_eval;
  out.basis_mode = s.basis_mode;
  return out;
}

SweepSeries blank_series(std::string name, std::size_t n) {
  SweepSeries s;
  s.name = std::move(name);
  s.fc.assign(n, 0.0);
  s.angle.assign(n, std::numeric_limits<double>::quiet_NaN());
  s.plane.assign(n, -1);
  return s;
}

// One encoded readout of one prepared state, ready for either basis mode.
struct Candidate {
  EncodedState encoded;
  BasisOptimizer::Prepared prepared;
};

struct PointResult {
  double fc = 0.0;
  double angle = std::numeric_limits<double>::quiet_NaN();
  int plane = -1;
};

class Evaluator {
 public:
  Evaluator(const SweepSettings& settings, const ProtocolRunner& runner)
      : settings_(settings),
        runner_(runner),
        sx_basis_(basis_matrix(runner.model().system(), BasisSpec::sx())) {
    if (settings.basis_mode == BasisMode::optimized) {
      optimizer_.emplace(runner.model().system(), runner.generator_direction());
    }
  }

  Candidate candidate(const Readout& readout) const {
    Candidate c{runner_.encode(settings_.phi_eval, readout), {}};
    if (optimizer_) c.prepared = optimizer_->prepare(c.encoded);
    return c;
  }

  // Serial inside: sweeps parallelize over points.
  PointResult evaluate(const Candidate& c, const NoiseKernel& kernel) const {
    if (!optimizer_) return {analytic_fisher(c.encoded, sx_basis_, kernel).value};
    const BasisOptimum best = optimizer_->optimize(c.prepared, kernel, settings_.search);
    return {best.fc, best.planes[best.winner].angle, best.winner};
  }

 private:
  const SweepSettings& settings_;
  const ProtocolRunner& runner_;
  CMatrix sx_basis_;
  std::optional<BasisOptimizer> optimizer_;
};

void store(SweepSeries& s, std::size_t i, const PointResult& r) {
  s.fc[i] = r.fc;
  s.angle[i] = r.angle;
  s.plane[i] = r.plane;
}

}  // namespace

SweepResult noise_sweep(const SweepSettings& settings, double t1,
                        const std::vector<double>& sigmas) {
  validate(settings);
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    NoiseModel{sigmas[i]}.validate();
    if (i > 0 && !(sigmas[i] > sigmas[i - 1])) {
      throw std::invalid_argument("noise_sweep: sigma grid must be strictly ascending");
    }
  }
  if (settings.asymmetric_ratios.empty()) {
    throw std::invalid_argument("noise_sweep: no asymmetric echo ratios");
  }
  for (double r : settings.asymmetric_ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("noise_sweep: ratios must be > 0");
  }

  const Model model(hamiltonian_of(settings));
  const SpinSystem& sys = model.system();
  const ProtocolRunner runner(model, base_protocol(settings, t1), initial_state(sys));
  const Evaluator eval(settings, runner);

  const Candidate trivial = eval.candidate(Readout::none());
  const Candidate echo = eval.candidate(Readout::echo(t1));
  const Candidate pseudo = eval.candidate(Readout::pseudo_echo(t1));
  std::vector<Candidate> asym;
  for (double r : settings.asymmetric_ratios) {
    asym.push_back(eval.candidate(Readout::reversal(t1, r * t1)));
  }

  const std::size_t n = sigmas.size();
  SweepResult out = blank_result(settings, "sigma", sigmas);
  out.t1 = t1;
  out.readout = "none,echo,asymmetric_echo,pseudo_echo";
  SweepSeries s_trivial = blank_series("fc_trivial", n);
  SweepSeries s_echo = blank_series("fc_echo", n);
  SweepSeries s_asym = blank_series("fc_asym", n);
  SweepSeries s_pseudo = blank_series("fc_pseudo", n);
  s_asym.ratio.assign(n, 0.0);

  for_each_index(static_cast<int>(n), settings.exec, [&](int i) {
    const NoiseKernel kernel(sys.dim(), sigmas[i]);
    store(s_trivial, i, eval.evaluate(trivial, kernel));
    store(s_echo, i, eval.evaluate(echo, kernel));
    store(s_pseudo, i, eval.evaluate(pseudo, kernel));
    PointResult best;
    std::size_t best_r = 0;
    for (std::size_t r = 0; r < asym.size(); ++r) {
      const PointResult p = eval.evaluate(asym[r], kernel);
      if (r == 0 || clearly_better(p.fc, best.fc)) {
        best = p;
        best_r = r;
      }
    }
    store(s_asym, i, best);
    s_asym.ratio[i] = settings.asymmetric_ratios[best_r];
  });

  out.series = {s_trivial, s_echo, s_asym, s_pseudo};
  out.qcrb.assign(n, qfi_pure(runner.prepared()).value);
  return out;
}

SweepResult echo_time_sweep(const SweepSettings& settings, double t1,
                            const std::vector<double>& ratios, const NoiseModel& noise) {
  validate(settings);
  noise.validate();
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("echo_time_sweep: ratios must be > 0");
    }
  }

  const Model model(hamiltonian_of(settings));
  const SpinSystem& sys = model.system();
  const ProtocolRunner runner(model, base_protocol(settings, t1), initial_state(sys));
  const Evaluator eval(settings, runner);
  const NoiseKernel kernel(sys.dim(), noise.sigma);

  const std::size_t n = ratios.size();
  SweepResult out = blank_result(settings, "ratio", ratios);
  out.t1 = t1;
  out.readout = "asymmetric_echo";
  SweepSeries series = blank_series("fc", n);
  series.ratio = ratios;

  for_each_index(static_cast<int>(n), settings.exec, [&](int i) {
    store(series, i, eval.evaluate(eval.candidate(Readout::reversal(t1, ratios[i] * t1)), kernel));
  });

  out.series = {series};
  out.qcrb.assign(n, qfi_pure(runner.prepared()).value);
  return out;
}

SweepResult budget_sweep(const SweepSettings& settings, double total_time,
                         const std::vector<double>& t1_grid, const NoiseModel& noise) {
  validate(settings);
  noise.validate();
  if (!(total_time > 0.0) || !std::isfinite(total_time)) {
    throw std::invalid_argument("budget_sweep: total time must be > 0");
  }
  for (double t1 : t1_grid) {
    if (!(t1 > 0.0 && t1 < total_time)) {
      throw std::invalid_argument("budget_sweep: need 0 < t1 < T for every grid point");
    }
  }

  const Model model(hamiltonian_of(settings));
  const SpinSystem& sys = model.system();
  const StateVector psi0 = initial_state(sys);
  const NoiseKernel kernel(sys.dim(), noise.sigma);

  const std::size_t n = t1_grid.size();
  SweepResult out = blank_result(settings, "t1", t1_grid);
  out.readout = "asymmetric_echo";
  SweepSeries series = blank_series("fc", n);
  series.ratio.assign(n, 0.0);
  out.qcrb.assign(n, 0.0);

  for_each_index(static_cast<int>(n), settings.exec, [&](int i) {
    const double t1 = t1_grid[i];
    const double t2 = total_time - t1;
    const ProtocolRunner runner(model, base_protocol(settings, t1), psi0);
    const Evaluator eval(settings, runner);
    store(series, i, eval.evaluate(eval.candidate(Readout::reversal(t1, t2)), kernel));
    series.ratio[i] = t2 / t1;
    out.qcrb[i] = qfi_pure(runner.prepared()).value;
  });

  out.series = {series};
  return out;
}

}  // namespace tnt
