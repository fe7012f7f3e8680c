#pragma once

#include "adrom/types.hpp"

#include <cstddef>

namespace adrom {

/// Uniform staggered (MAC) grid on the unit square.
///
/// State layout (length 2*nx*ny): each cell owns the velocity on its right
/// face (u) and on its top face (v). Entry u(i,j) sits at x=(i+1)dx,
/// y=(j+1/2)dy; entry v(i,j) sits at x=(i+1/2)dx, y=(j+1)dy. The u entries
/// with i=nx-1 lie on the right wall and the v entries with j=ny-1 lie on the
/// lid; both are identically zero in every state. Faces on the left and
/// bottom walls are not stored. All u entries come first, row by row in j,
/// followed by all v entries.
struct Grid {
  int nx = 100;
  int ny = 100;

  Grid() = default;
  Grid(int nx_, int ny_) : nx(nx_), ny(ny_) {
    require(nx_ >= 2 && ny_ >= 2, "Grid: need at least 2x2 cells");
  }

  double dx() const { return 1.0 / nx; }
  double dy() const { return 1.0 / ny; }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t size() const { return 2 * cells(); }

  std::size_t u_index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx + i;
  }
  std::size_t v_index(int i, int j) const {
    return cells() + static_cast<std::size_t>(j) * nx + i;
  }

  double u_x(int i) const { return (i + 1) * dx(); }
  double u_y(int j) const { return (j + 0.5) * dy(); }
  double v_x(int i) const { return (i + 0.5) * dx(); }
  double v_y(int j) const { return (j + 1) * dy(); }

  bool is_wall_u(int i) const { return i == nx - 1; }
  bool is_wall_v(int j) const { return j == ny - 1; }
};

} // namespace adrom
