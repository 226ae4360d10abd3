#include "tnt/husimi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tnt {

double QGrid::theta(int i) const { return std::numbers::pi * i / (n_theta - 1); }

double QGrid::phi(int j) const { return 2.0 * std::numbers::pi * j / n_phi; }

double QGrid::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

QGrid husimi_q(const StateVector& psi, const QGridSpec& spec, Execution exec) {
  if (spec.n_theta < 2 || spec.n_phi < 1) {
    throw std::invalid_argument("husimi_q: grid needs n_theta >= 2 and n_phi >= 1");
  }
  QGrid out;
  out.n_theta = spec.n_theta;
  out.n_phi = spec.n_phi;
  out.values.assign(static_cast<std::size_t>(spec.n_theta) * spec.n_phi, 0.0);

  const SpinSystem& sys = psi.system();
  const CVector& amp = psi.amplitudes();
  for_each_index(out.n_theta * out.n_phi, exec, [&](int idx) {
    const int i = idx / out.n_phi;
    const int j = idx % out.n_phi;
    const CVector cs = coherent_state(sys, out.theta(i), out.phi(j)).amplitudes();
    out.values[idx] = std::norm(cs.dot(amp));
  });

  if (spec.normalize) {
    const double peak = out.max();
    if (peak > 0.0) {
      for (double& v : out.values) v /= peak;
    }
    out.normalized = true;
  }
  return out;
}

double husimi_normalization(const QGrid& grid, int n_atoms) {
  if (grid.normalized) {
    throw std::invalid_argument("husimi_normalization: grid was divided by its maximum");
  }
  const double d_phi = 2.0 * std::numbers::pi / grid.n_phi;
  // theta_i = pi i / M are the Chebyshev points of x = cos(theta), and the
  // phi-averaged Q is a polynomial of degree N in x, so Clenshaw-Curtis
  // weights integrate it (nearly) exactly; trapezoid in theta is only second
  // order once the state reaches the poles.
  const int m = grid.n_theta - 1;
  double total = 0.0;
  for (int i = 0; i <= m; ++i) {
    double w = 1.0;
    for (int k = 1; 2 * k <= m; ++k) {
      const double b = (2 * k == m) ? 1.0 : 2.0;
      w -= b / (4.0 * k * k - 1.0) * std::cos(2.0 * k * i * std::numbers::pi / m);
    }
    w *= (i == 0 || i == m ? 1.0 : 2.0) / m;
    double ring = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) ring += grid.at(i, j);
    total += w * ring;
  }
  return total * d_phi * (n_atoms + 1) / (4.0 * std::numbers::pi);
}

}  // namespace tnt
