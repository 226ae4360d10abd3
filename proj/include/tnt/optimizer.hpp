#ifndef TNT_OPTIMIZER_HPP
#define TNT_OPTIMIZER_HPP

// Measurement-basis search under detection noise and the readout sweeps
// built on it (noise decay, echo duration, fixed time budget).

#include "tnt/dynamics.hpp"
#include "tnt/metrology.hpp"
#include "tnt/parallel.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace tnt {

/// Coarse grid over measurement angles in [0, pi) followed by golden-section
/// refinement around the best grid point. Directions d and -d give the same
/// measurement, so half a turn covers every basis in a plane.
struct BasisSearchSpec {
  int grid = 64;
  int refine_iterations = 40;
  double tolerance = 1e-6;  // radians

  void validate() const;
};

/// Measurement direction cos(theta) a + sin(theta) b for orthonormal a, b.
struct SearchPlane {
  Vec3 a;
  Vec3 b;

  Vec3 direction(double theta) const;
};

/// The two planes searched: normal to S_n (contains S_x at angle 0) and
/// normal to S_x (contains S_n at angle 0). Order is significant: the first
/// plane wins exact ties.
std::array<SearchPlane, 2> search_planes(const Vec3& generator_dir);

/// Spectral data to rotate outcome amplitudes through one search plane:
/// the basis at angle theta is exp(-i theta c.S) applied to the eigenbasis
/// of a.S, with c = a x b. Amplitudes cost one dim x dim product per angle.
class PlaneBasis {
 public:
  PlaneBasis(const SpinSystem& system, const SearchPlane& plane);

  const SearchPlane& plane() const { return plane_; }

  /// State expressed in the eigenbasis of c.S, to feed amplitudes().
  CVector to_axis_frame(const CVector& state) const { return axis_vectors_.adjoint() * state; }
  /// Outcome amplitudes in the basis at angle theta, one column per state.
  CMatrix amplitudes(double theta, const CMatrix& axis_frame_states) const;
  /// Explicit basis matrix at angle theta (columns descending eigenvalue).
  CMatrix basis(double theta) const;

 private:
  SearchPlane plane_;
  RVector axis_values_;
  CMatrix axis_vectors_;
  CMatrix start_in_axis_frame_;  // V_a^dagger W
};

struct PlaneOptimum {
  SearchPlane plane;
  double angle = 0.0;
  double fc = 0.0;

  Vec3 direction() const { return plane.direction(angle); }
};

struct BasisOptimum {
  BasisSpec basis;
  Vec3 direction;
  double fc = 0.0;
  std::array<PlaneOptimum, 2> planes;
  int winner = 0;
};

/// Reusable basis search for one generator direction; the per-plane spectral
/// data is built once and shared across noise levels and readouts.
class BasisOptimizer {
 public:
  BasisOptimizer(const SpinSystem& system, const Vec3& generator_dir);

  /// Encoded state and derivative transformed into each plane's axis frame.
  struct Prepared {
    std::array<CVector, 2> state;
    std::array<CVector, 2> derivative;
  };
  Prepared prepare(const EncodedState& encoded) const;

  double fisher(int plane, double theta, const Prepared& prepared,
                const NoiseKernel& kernel) const;

  BasisOptimum optimize(const Prepared& prepared, const NoiseKernel& kernel,
                        const BasisSearchSpec& search = {},
                        Execution exec = Execution::serial) const;

  const PlaneBasis& plane(int i) const { return planes_[i]; }

 private:
  PlaneOptimum optimize_plane(int plane, const Prepared& prepared, const NoiseKernel& kernel,
                              const BasisSearchSpec& search, Execution exec) const;

  std::array<PlaneBasis, 2> planes_;
};

/// Best measurement basis for a protocol at phase phi_eval.
BasisOptimum optimize_basis(const ProtocolSpec& spec, const StateVector& psi0,
                            const NoiseModel& noise, const BasisSearchSpec& search = {},
                            double phi_eval = kDefaultPhiEval);

/// Golden-section maximization of f on [lo, hi]. Returns the arg max.
template <typename F>
double golden_section_maximize(F&& f, double lo, double hi, int max_iterations,
                               double tolerance);

enum class BasisMode { fixed_sx, optimized };

std::string to_string(BasisMode mode);
BasisMode basis_mode_from_string(const std::string& name);

/// Everything shared by the points of a sweep.
struct SweepSettings {
  int n_atoms = 100;
  double lambda = 2.0;
  double phi_eval = kDefaultPhiEval;
  BasisMode basis_mode = BasisMode::optimized;
  BasisSearchSpec search;
  /// t2/t1 candidates for the asymmetric echo in noise sweeps; the best one
  /// is taken per noise level.
  std::vector<double> asymmetric_ratios = default_asymmetric_ratios();
  Execution exec = Execution::parallel;

  static std::vector<double> default_asymmetric_ratios();
};

struct SweepSeries {
  std::string name;
  std::vector<double> fc;
  /// Optimal measurement angle in the winning plane (NaN for fixed S_x).
  std::vector<double> angle;
  /// Winning plane index (-1 for fixed S_x).
  std::vector<int> plane;
  /// Chosen t2/t1, only for series that optimize it.
  std::vector<double> ratio;
};

struct SweepResult {
  std::string axis_name;
  std::vector<double> axis;
  std::vector<SweepSeries> series;
  std::vector<double> qcrb;  // F_Q per point
  double snl = 0.0;          // N

  // metadata
  int n_atoms = 0;
  double lambda = 0.0;
  std::optional<double> t1;  // empty when t1 is the axis
  std::string readout;
  double phi_eval = 0.0;
  BasisMode basis_mode = BasisMode::optimized;
  bool deterministic = true;

  const SweepSeries& at(const std::string& name) const;
};

/// F_c versus detection noise for U_2 in {1, U_1^dagger(t1),
/// U_1^dagger(r t1) with r optimized, U_1(t1)}.
/// Series: fc_trivial, fc_echo, fc_asym, fc_pseudo.
SweepResult noise_sweep(const SweepSettings& settings, double t1,
                        const std::vector<double>& sigmas);

/// F_c versus t2/t1 for U_2 = U_1^dagger(t2). Series: fc.
SweepResult echo_time_sweep(const SweepSettings& settings, double t1,
                            const std::vector<double>& ratios, const NoiseModel& noise);

/// F_c versus t1 with t2 = total - t1 and U_2 = U_1^dagger(t2). Series: fc.
SweepResult budget_sweep(const SweepSettings& settings, double total_time,
                         const std::vector<double>& t1_grid, const NoiseModel& noise);

/// First axis value where fc drops below `snl`, by linear interpolation
/// between the bracketing grid points. Empty if it never does.
std::optional<double> snl_crossing(const std::vector<double>& axis,
                                   const std::vector<double>& fc, double snl);

/// start, start + step, ..., up to stop inclusive (within step/1e6).
std::vector<double> linear_grid(double start, double stop, double step);

// --- implementation -------------------------------------------------------

template <typename F>
double golden_section_maximize(F&& f, double lo, double hi, int max_iterations,
                               double tolerance) {
  const double ratio = 0.6180339887498949;  // (sqrt 5 - 1) / 2
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < max_iterations && (hi - lo) > tolerance; ++it) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

}  // namespace tnt

#endif  // TNT_OPTIMIZER_HPP
