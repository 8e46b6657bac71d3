#ifndef OSCILLAX_GRID_HPP
#define OSCILLAX_GRID_HPP

#include <stdexcept>

namespace oscillax {

/// Uniform grid on [0, 1]: strain-like fields live on the n cells, velocity
/// on the n + 1 nodes x_j = j dx.
struct Grid1D {
  int n_cells{16};

  double dx() const { return 1.0 / n_cells; }
  double cell_center(int i) const { return (i + 0.5) / n_cells; }
  double node(int j) const { return static_cast<double>(j) / n_cells; }
  /// Control-volume width of node j (half cells at the walls).
  double node_weight(int j) const { return (j == 0 || j == n_cells) ? 0.5 * dx() : dx(); }

  void validate() const {
    if (n_cells < 16) throw std::invalid_argument("Grid1D: n_cells must be >= 16");
  }
};

}  // namespace oscillax

#endif  // OSCILLAX_GRID_HPP
