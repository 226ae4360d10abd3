#include "tnt/metrology.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace tnt;

namespace {

ProtocolSpec protocol(int n, double t1, Readout readout, BasisSpec basis = BasisSpec::sx()) {
  ProtocolSpec spec;
  spec.hamiltonian = HamiltonianSpec::twist_and_turn(SpinSystem(n), 2.0);
  spec.t1 = t1;
  spec.readout = readout;
  spec.measurement = basis;
  return spec;
}

double qfi_of(const ProtocolSpec& spec) {
  const auto& sys = spec.hamiltonian.system;
  const ProtocolRunner runner(Model(spec.hamiltonian), spec, initial_state(sys));
  return qfi_pure(runner.prepared()).value;
}

ProbDist dist(std::initializer_list<double> values, double spin) {
  RVector p(static_cast<Eigen::Index>(values.size()));
  int k = 0;
  for (double v : values) p(k++) = v;
  return ProbDist(spin, p);
}

}  // namespace

TEST(ProbDist, Validation) {
  EXPECT_THROW(dist({0.5, 0.6}, 0.5), std::invalid_argument);
  EXPECT_THROW(dist({1.1, -0.1}, 0.5), std::invalid_argument);
  EXPECT_THROW(dist({0.5, 0.5}, 1.0), std::invalid_argument);
  const auto p = dist({1.0, -1e-15}, 0.5);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_DOUBLE_EQ(p.label(0), 0.5);
  EXPECT_DOUBLE_EQ(p.label(1), -0.5);
}

TEST(MeasurementProbs, EigenstateIsDelta) {
  SpinSystem sys(6);
  const auto p = measurement_probs(initial_state(sys), BasisSpec::sx());
  EXPECT_NEAR(p[6], 1.0, 1e-12);
  EXPECT_NEAR(p.probs().head(6).sum(), 0.0, 1e-12);
}

TEST(MeasurementProbs, MinSxStateInSzBasis) {
  const auto p = measurement_probs(initial_state(SpinSystem(2)), BasisSpec::sz());
  EXPECT_NEAR(p[0], 0.25, 1e-12);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
  EXPECT_NEAR(p[2], 0.25, 1e-12);
}

TEST(Noise, PassthroughBelowThreshold) {
  const auto p = dist({0.2, 0.3, 0.5}, 1.0);
  EXPECT_EQ(convolve_noise(p, {0.0}).probs(), p.probs());
  EXPECT_EQ(convolve_noise(p, {5e-7}).probs(), p.probs());
  EXPECT_THROW(convolve_noise(p, {-1.0}), std::invalid_argument);
  EXPECT_THROW(convolve_noise(p, {std::nan("")}), std::invalid_argument);
}

TEST(Noise, MatchesNaiveKernel) {
  SpinSystem sys(20);
  RVector p = RVector::Zero(21);
  p(10) = 1.0;
  for (double sigma : {0.3, 1.0, 5.0, 40.0}) {
    const auto noisy = convolve_noise(ProbDist(10.0, p), {sigma});
    EXPECT_LT((noisy.probs() - oracle::blur(p, sigma)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(noisy.probs().sum(), 1.0, 1e-13);
    EXPECT_DOUBLE_EQ(noisy.noise_sigma(), sigma);
  }
}

TEST(Noise, KernelIsColumnNormalizedAndReflectionSymmetric) {
  const NoiseKernel k(31, 2.5);
  const RMatrix& w = k.weights();
  for (int c = 0; c < 31; ++c) EXPECT_NEAR(w.col(c).sum(), 1.0, 1e-14);
  RVector p(31);
  for (int i = 0; i < 31; ++i) p(i) = 1.0 + std::sin(0.7 * i);
  p /= p.sum();
  EXPECT_LT((k.apply(p.reverse()) - k.apply(p).reverse()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((k.apply(2.0 * p) - 2.0 * k.apply(p)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fisher, CoherentStateInSzBasisGivesN) {
  // Rotating the -x coherent state about y and measuring S_z: F_c = N.
  for (int n : {4, 10}) {
    auto spec = protocol(n, 0.0, Readout::none(), BasisSpec::sz());
    spec.generator_dir = Vec3::UnitY();
    const auto psi0 = initial_state(SpinSystem(n));
    EXPECT_NEAR(cfi(spec, psi0, {0.0}).value, n, 1e-6 * n);
    const auto s = oracle::spins(n);
    const double ref = oracle::fisher(kDefaultPhiEval, CMatrix::Identity(n + 1, n + 1), s.sy,
                                      oracle::min_sx_state(n), CMatrix::Identity(n + 1, n + 1), 0);
    EXPECT_NEAR(ref, n, 1e-4 * n);
  }
}

TEST(Fisher, MatchesCentralDifferenceOracle) {
  const int n = 16;
  const auto s = oracle::spins(n);
  const CMatrix h = oracle::tnt_hamiltonian(n, 2.0);
  const CVector psi0 = oracle::min_sx_state(n);
  for (double sigma : {0.0, 1.0, 3.0}) {
    for (double t2 : {0.1, 0.15}) {
      auto spec = protocol(n, 0.1, Readout::reversal(0.1, t2));
      spec.generator_dir = Vec3(0, 0.6, 0.8);
      const double fc = cfi(spec, initial_state(SpinSystem(n)), {sigma}, 0.05).value;
      const CMatrix basis = oracle::descending_eigenvectors(s.sx);
      const double ref = oracle::fisher(0.05, oracle::evolve(h, -t2), 0.6 * s.sy + 0.8 * s.sz,
                                        oracle::evolve(h, 0.1) * psi0, basis, sigma);
      EXPECT_NEAR(fc, ref, 1e-5 * ref) << "sigma=" << sigma << " t2=" << t2;
    }
  }
}

TEST(Fisher, EchoSaturatesQcrbWithoutNoise) {
  const auto spec = protocol(100, 0.072, Readout::echo(0.072));
  const double fq = qfi_of(spec);
  const double fc = cfi(spec, initial_state(SpinSystem(100)), {0.0}).value;
  EXPECT_NEAR(fc, fq, 1e-3 * fq);
}

TEST(Fisher, TrivialReadoutSaturatesQcrbWithoutNoise) {
  const auto spec = protocol(100, 0.072, Readout::none());
  const double fq = qfi_of(spec);
  EXPECT_NEAR(cfi(spec, initial_state(SpinSystem(100)), {0.0}).value, fq, 1e-3 * fq);
}

TEST(Fisher, BoundedByQfi) {
  const auto psi0 = initial_state(SpinSystem(60));
  for (double t1 : {0.01, 0.03, 0.08}) {
    for (auto readout : {Readout::none(), Readout::echo(t1), Readout::pseudo_echo(t1),
                         Readout::asymmetric_echo(1.7 * t1)}) {
      for (auto basis : {BasisSpec::sx(), BasisSpec::sz(), BasisSpec::along(Vec3(0.6, 0.8, 0))}) {
        for (double sigma : {0.0, 2.0}) {
          auto spec = protocol(60, t1, readout, basis);
          const double fq = qfi_of(spec);
          EXPECT_LE(cfi(spec, psi0, {sigma}).value, fq * (1 + 1e-6));
        }
      }
    }
  }
}

TEST(Fisher, AnalyticAgreesWithFiniteDifference) {
  const auto psi0 = initial_state(SpinSystem(100));
  for (double sigma : {0.0, 1.0, 5.0}) {
    for (auto readout : {Readout::none(), Readout::echo(0.027), Readout::pseudo_echo(0.027)}) {
      const auto spec = protocol(100, 0.027, readout);
      const auto a = cfi(spec, psi0, {sigma}, kDefaultPhiEval, FisherMethod::analytic);
      const auto f = cfi(spec, psi0, {sigma}, kDefaultPhiEval, FisherMethod::finite_difference);
      EXPECT_EQ(f.method, FisherMethod::finite_difference);
      EXPECT_NEAR(a.value, f.value, 1e-4 * a.value) << "sigma=" << sigma;
    }
  }
}

TEST(Fisher, ParityZerosAreReported) {
  const auto spec = protocol(20, 0.05, Readout::echo(0.05));
  const auto psi0 = initial_state(SpinSystem(20));
  const auto at_zero = cfi(spec, psi0, {0.0}, 0.0);
  EXPECT_GT(at_zero.dropped_terms, 0);
  EXPECT_TRUE(at_zero.near_parity_zero());
  const auto away = cfi(spec, psi0, {0.0}, kDefaultPhiEval);
  EXPECT_FALSE(away.near_parity_zero());
  EXPECT_DOUBLE_EQ(away.phi_eval, kDefaultPhiEval);
}

TEST(FisherSum, SkipsTinyProbabilities) {
  RVector p(3), dp(3);
  p << 0.5, 0.5, 1e-13;
  dp << 1.0, -1.0, 1.0;
  EXPECT_DOUBLE_EQ(fisher_sum(p, dp), 4.0);
}

TEST(Qfi, CoherentAndRotated) {
  SpinSystem sys(40);
  EXPECT_NEAR(qfi_pure(initial_state(sys)).value, 40.0, 1e-9);
  const Model model(HamiltonianSpec::twist_and_turn(sys, 2.0));
  const StateVector psi(sys, model.evolution().apply(0.03, initial_state(sys).amplitudes()));
  const auto q = qfi_pure(psi);
  // Global phase invariance and covariance under a collective rotation.
  const StateVector phased(sys, std::polar(1.0, 0.7) * psi.amplitudes());
  EXPECT_NEAR(qfi_pure(phased).value, q.value, 1e-9 * q.value);
  const CMatrix r = rotation_operator(sys, Vec3(0.6, 0, 0.8), 1.1).matrix();
  EXPECT_NEAR(qfi_pure(StateVector(sys, r * psi.amplitudes())).value, q.value, 1e-9 * q.value);
  // 4 Var(S_n) along the reported direction.
  const auto s = oracle::spins(40);
  const CMatrix gn = q.optimal_dir.x() * s.sx + q.optimal_dir.y() * s.sy + q.optimal_dir.z() * s.sz;
  EXPECT_NEAR(4 * oracle::variance(gn, psi.amplitudes()), q.value, 1e-9 * q.value);
}

TEST(Squeezing, CoherentStateIsUnsqueezed) {
  SpinSystem sys(50);
  const auto r = squeezing_gain(coherent_state(sys, 1.0, 2.0));
  EXPECT_NEAR(r.xi2, 1.0, 1e-10);
  EXPECT_NEAR(r.gain, 1.0, 1e-10);
}

TEST(Squeezing, TwistedStateIsSqueezedTransverseToMean) {
  SpinSystem sys(100);
  const Model model(HamiltonianSpec::twist_and_turn(sys, 2.0));
  const StateVector psi(sys, model.evolution().apply(0.027, initial_state(sys).amplitudes()));
  const auto r = squeezing_gain(psi);
  EXPECT_GT(r.gain, 1.0);
  EXPECT_NEAR(r.direction.dot(mean_spin(psi).normalized()), 0.0, 1e-9);
}

TEST(Squeezing, VanishingMeanThrows) {
  CVector dicke = CVector::Zero(3);
  dicke(1) = 1;
  EXPECT_THROW(squeezing_gain(StateVector(SpinSystem(2), dicke)), std::domain_error);
}

TEST(Hellinger, Properties) {
  const auto p = dist({0.2, 0.3, 0.5}, 1.0);
  const auto q = dist({0.5, 0.1, 0.4}, 1.0);
  EXPECT_NEAR(hellinger(p, p), 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(hellinger(p, q), hellinger(q, p));
  const double ref = 1 - (std::sqrt(0.1) + std::sqrt(0.03) + std::sqrt(0.2));
  EXPECT_NEAR(hellinger(p, q), ref, 1e-15);
  EXPECT_NEAR(hellinger(dist({1, 0}, 0.5), dist({0, 1}, 0.5)), 1.0, 1e-15);
  EXPECT_NEAR(hellinger(dist({0.3, 0.2, 0.5}, 1.0), dist({0.1, 0.5, 0.4}, 1.0)),
              hellinger(dist({0.2, 0.3, 0.5}, 1.0), dist({0.5, 0.1, 0.4}, 1.0)), 1e-15);
  EXPECT_THROW(hellinger(p, dist({1, 0}, 0.5)), std::invalid_argument);
}

TEST(Hellinger, SmallDistanceKeepsPrecision) {
  const double e = 1e-6;
  const auto p = dist({0.5, 0.5}, 0.5);
  const auto q = dist({0.5 + e, 0.5 - e}, 0.5);
  EXPECT_NEAR(hellinger(p, q), e * e / 2, 1e-3 * e * e);
}

TEST(Hellinger, CfiEstimateMatchesFisher) {
  // Noiseless parity readout: F_c is flat near phi = 0.
  const auto psi0 = initial_state(SpinSystem(100));
  for (auto readout : {Readout::none(), Readout::echo(0.027), Readout::echo(0.072)}) {
    const auto spec = protocol(100, readout.kind == ReadoutKind::none ? 0.027 : readout.t2, readout);
    const double fc = cfi(spec, psi0, {0.0}).value;
    EXPECT_NEAR(hellinger_cfi_estimate(spec, psi0, {0.0}), fc, 0.01 * fc);
  }
  // Noisy S_z readout of a rotated coherent state.
  auto spec = protocol(20, 0.0, Readout::none(), BasisSpec::sz());
  spec.generator_dir = Vec3::UnitY();
  const auto psi20 = initial_state(SpinSystem(20));
  const double fc = cfi(spec, psi20, {1.5}, 0.0).value;
  EXPECT_NEAR(hellinger_cfi_estimate(spec, psi20, {1.5}), fc, 0.01 * fc);
}

TEST(Hellinger, CfiEstimateConvergesQuadratically) {
  auto spec = protocol(10, 0.0, Readout::none(), BasisSpec::sz());
  spec.generator_dir = Vec3::UnitY();
  const auto psi0 = initial_state(SpinSystem(10));
  const double e1 = std::abs(hellinger_cfi_estimate(spec, psi0, {0.0}, 1e-1) - 10.0);
  const double e2 = std::abs(hellinger_cfi_estimate(spec, psi0, {0.0}, 1e-2) - 10.0);
  EXPECT_GT(e1 / e2, 50.0);
  EXPECT_LT(e1 / e2, 200.0);
  EXPECT_THROW(hellinger_cfi_estimate(spec, psi0, {0.0}, 0.0), std::invalid_argument);
}
