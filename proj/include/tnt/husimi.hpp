#ifndef TNT_HUSIMI_HPP
#define TNT_HUSIMI_HPP

// SU(2) Husimi Q-function Q(theta, phi) = |<theta, phi|psi>|^2 on a uniform
// (theta, phi) grid.

#include "tnt/parallel.hpp"
#include "tnt/spin_core.hpp"

#include <vector>

namespace tnt {

struct QGridSpec {
  int n_theta = 90;
  int n_phi = 180;
  /// Divide by the grid maximum.
  bool normalize = true;
};

/// theta_i = pi i / (n_theta - 1) covers both poles; phi_j = 2 pi j / n_phi.
/// Values are row-major: index i * n_phi + j.
struct QGrid {
  int n_theta = 0;
  int n_phi = 0;
  bool normalized = false;
  std::vector<double> values;

  double theta(int i) const;
  double phi(int j) const;
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n_phi + j]; }
  double max() const;
};

/// Throws std::invalid_argument for n_theta < 2 or n_phi < 1.
QGrid husimi_q(const StateVector& psi, const QGridSpec& spec = {},
               Execution exec = Execution::parallel);

/// (N+1)/(4 pi) * integral of Q over the sphere: Clenshaw-Curtis in
/// cos(theta) (the uniform theta grid is its node set), periodic rectangle
/// rule in phi. Needs an unnormalized grid; equals 1 for any state
/// up to quadrature error.
double husimi_normalization(const QGrid& grid, int n_atoms);

}  // namespace tnt

#endif  // TNT_HUSIMI_HPP
