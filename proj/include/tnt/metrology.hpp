#ifndef TNT_METROLOGY_HPP
#define TNT_METROLOGY_HPP

// Outcome distributions, Gaussian detection noise, Fisher information,
// Wineland squeezing and the Hellinger distance.

#include "tnt/dynamics.hpp"
#include "tnt/spin_core.hpp"

namespace tnt {

inline constexpr double kNoisePassthrough = 1e-6;
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kDroppedMassLimit = 1e-6;
inline constexpr double kFiniteDifferenceStep = 1e-6;
/// Phase at which the classical Fisher information is evaluated by default.
inline constexpr double kDefaultPhiEval = 1e-4;

struct NoiseModel {
  /// Gaussian detection noise width, in units of spin projection.
  double sigma = 0.0;

  void validate() const;
  bool passthrough() const { return sigma < kNoisePassthrough; }
};

/// Probabilities over the outcome labels m = s, s-1, ..., -s of some
/// measurement basis. Normalized to 1e-10; entries down to -1e-14 are
/// clamped to zero.
class ProbDist {
 public:
  ProbDist(double spin, RVector probs, double noise_sigma = 0.0);

  int size() const { return static_cast<int>(probs_.size()); }
  double spin() const { return spin_; }
  double label(int k) const { return spin_ - k; }
  const RVector& probs() const { return probs_; }
  double operator[](int k) const { return probs_(k); }
  double noise_sigma() const { return noise_sigma_; }

 private:
  double spin_;
  RVector probs_;
  double noise_sigma_;
};

/// Column-normalized Gaussian blur on the N+1 outcome labels:
///   W(m, m') = C_{m'} exp(-(m - m')^2 / 2 sigma^2),  sum_m W(m, m') = 1.
/// Only physical labels enter both sums. Linear, so it applies equally to
/// probabilities and to their phase derivatives.
class NoiseKernel {
 public:
  NoiseKernel(int dim, double sigma);

  RVector apply(const RVector& p) const;
  bool passthrough() const { return weights_.size() == 0; }
  double sigma() const { return sigma_; }
  const RMatrix& weights() const { return weights_; }

 private:
  double sigma_;
  RMatrix weights_;  // empty in passthrough mode
};

/// |<b_k|psi>|^2 for the columns of `basis`.
RVector outcome_probs(const CMatrix& basis, const CVector& state);

ProbDist measurement_probs(const StateVector& psi, const BasisSpec& basis);
ProbDist convolve_noise(const ProbDist& p, const NoiseModel& noise);

enum class FisherMethod { analytic, finite_difference };

struct FisherResult {
  double value = 0.0;
  double phi_eval = 0.0;
  FisherMethod method = FisherMethod::analytic;
  /// Outcomes skipped because their (noisy) probability fell below 1e-12.
  int dropped_terms = 0;
  /// Share of the Fisher information that sits on the skipped outcomes,
  /// estimated from the noise-blurred 4 |<m|d psi/d phi>|^2 there: 0 when
  /// nothing is skipped, close to 1 at a parity zero.
  double dropped_mass = 0.0;
  bool near_parity_zero() const { return dropped_mass > kDroppedMassLimit; }
};

/// sum_m dp_m^2 / p_m over p_m >= kProbabilityFloor.
double fisher_sum(const RVector& p, const RVector& dp);

/// Analytic classical Fisher information of an encoded state (state and
/// phase derivative) measured in the columns of `basis`.
FisherResult analytic_fisher(const EncodedState& encoded, const CMatrix& basis,
                             const NoiseKernel& kernel);

/// Same, from outcome amplitudes <b_k|psi> and <b_k|dpsi/dphi> already
/// expressed in the measurement basis.
FisherResult fisher_from_amplitudes(const CVector& amp, const CVector& damp,
                                    const NoiseKernel& kernel);

/// Classical Fisher information for a prepared protocol measured in the
/// columns of `basis` with detection noise `kernel`.
FisherResult classical_fisher(const ProtocolRunner& runner, const CMatrix& basis,
                              const NoiseKernel& kernel, double phi_eval,
                              FisherMethod method = FisherMethod::analytic);

FisherResult cfi(const ProtocolSpec& spec, const StateVector& psi0,
                 const NoiseModel& noise, double phi_eval = kDefaultPhiEval,
                 FisherMethod method = FisherMethod::analytic);

struct QfiResult {
  double value;
  Vec3 optimal_dir;
};

/// F_Q = 4 max_n Var(S_n) for a pure state.
QfiResult qfi_pure(const StateVector& psi);

struct SqueezingResult {
  double xi2;
  double gain;     // 1 / xi2
  Vec3 direction;  // least-variance direction transverse to the mean spin
};

/// Wineland parameter xi^2 = N min_{n' perp mean} Var(S_n') / |<S>|^2.
/// Throws std::domain_error when the mean spin vanishes.
SqueezingResult squeezing_gain(const StateVector& psi);

/// d_H^2 = 1 - sum_m sqrt(p_m q_m), clamped to [0, 1].
double hellinger(const ProbDist& p, const ProbDist& q);

/// Noisy outcome distribution of a prepared protocol at phase phi.
ProbDist protocol_distribution(const ProtocolRunner& runner, const CMatrix& basis,
                               const NoiseKernel& kernel, double phi);

/// 8 d_H^2(P(0), P(dphi)) / dphi^2, the small-phase Hellinger estimate of
/// the Fisher information at phi = 0.
double hellinger_cfi_estimate(const ProtocolSpec& spec, const StateVector& psi0,
                              const NoiseModel& noise, double dphi = 1e-3);

}  // namespace tnt

#endif  // TNT_METROLOGY_HPP
