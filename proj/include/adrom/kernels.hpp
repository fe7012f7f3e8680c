#pragma once

// Stencil kernels of the staggered cavity discretization.
//
// The default implementations are OpenMP-parallel over grid rows and work on
// ghost-padded copies of the velocity. The kernels in adrom::kernels::serial
// evaluate the same discrete operators face by face through boundary-aware
// accessors; they are kept as the reference the parallel versions are tested
// and benchmarked against.

#include "adrom/grid.hpp"

#include <span>
#include <vector>

namespace adrom::kernels {

/// Ghost-padded copy of a staggered velocity field. Ghost values implement
/// no-slip walls by linear extrapolation, with tangential velocity `lid` on
/// the top wall.
class PaddedVelocity {
public:
  explicit PaddedVelocity(const Grid &g);

  void fill(std::span<const double> vel, double lid);

  // Face-index accessors: u at x=i*dx (i=0..nx), y=(j+1/2)dy (j=-1..ny);
  // v at x=(i+1/2)dx (i=-1..nx), y=j*dy (j=0..ny).
  double u(int i, int j) const { return u_[(j + 1) * ustride_ + i]; }
  double v(int i, int j) const { return v_[j * vstride_ + (i + 1)]; }

  const double *u_row(int j) const { return u_.data() + (j + 1) * ustride_; }
  const double *v_row(int j) const { return v_.data() + j * vstride_ + 1; }

private:
  Grid g_;
  int ustride_;
  int vstride_;
  std::vector<double> u_;
  std::vector<double> v_;
};

/// out = -div(V V) + nu * lap(V) on every stored face (zero on wall faces).
void momentum(const Grid &g, double nu, const PaddedVelocity &pv,
              std::span<double> out);

/// Cell-centered discrete divergence (size nx*ny, row-major in j).
void divergence(const Grid &g, std::span<const double> vel,
                std::span<double> div);

/// vel -= scale * grad(p) on interior faces; p is cell-centered.
void subtract_gradient(const Grid &g, std::span<const double> p, double scale,
                       std::span<double> vel);

/// Cell-centered vorticity dv/dx - du/dy, averaged from the four cell corners.
void vorticity(const Grid &g, const PaddedVelocity &pv, std::span<double> omega);

namespace serial {

void momentum(const Grid &g, double nu, double lid, std::span<const double> vel,
              std::span<double> out);
void divergence(const Grid &g, std::span<const double> vel,
                std::span<double> div);
void subtract_gradient(const Grid &g, std::span<const double> p, double scale,
                       std::span<double> vel);
void vorticity(const Grid &g, double lid, std::span<const double> vel,
               std::span<double> omega);

} // namespace serial

} // namespace adrom::kernels
