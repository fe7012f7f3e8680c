// Reference (serial) versions of the stencil kernels. Every face value is
// fetched through accessors that apply the wall conditions on the fly.

#include "adrom/kernels.hpp"

namespace adrom::kernels::serial {
namespace {

struct Accessor {
  const Grid &g;
  std::span<const double> vel;
  double lid;

  // u at x = i*dx, y = (j+1/2)*dy.
  double u(int i, int j) const {
    if (i <= 0 || i >= g.nx)
      return 0.0;
    if (j < 0)
      return -u(i, 0);
    if (j >= g.ny)
      return 2.0 * lid - u(i, g.ny - 1);
    return vel[g.u_index(i - 1, j)];
  }

  // v at x = (i+1/2)*dx, y = j*dy.
  double v(int i, int j) const {
    if (j <= 0 || j >= g.ny)
      return 0.0;
    if (i < 0)
      return -v(0, j);
    if (i >= g.nx)
      return -v(g.nx - 1, j);
    return vel[g.v_index(i, j - 1)];
  }
};

} // namespace

void momentum(const Grid &g, double nu, double lid, std::span<const double> vel,
              std::span<double> out) {
  const Accessor a{g, vel, lid};
  const double dx = g.dx(), dy = g.dy();

  for (int j = 0; j < g.ny; ++j) {
    for (int is = 0; is < g.nx; ++is) {
      const int i = is + 1;
      if (g.is_wall_u(is)) {
        out[g.u_index(is, j)] = 0.0;
        continue;
      }
      const double uc = a.u(i, j);
      const double ue = 0.5 * (uc + a.u(i + 1, j));
      const double uw = 0.5 * (a.u(i - 1, j) + uc);
      const double un = 0.5 * (uc + a.u(i, j + 1));
      const double us = 0.5 * (a.u(i, j - 1) + uc);
      const double vn = 0.5 * (a.v(i - 1, j + 1) + a.v(i, j + 1));
      const double vs = 0.5 * (a.v(i - 1, j) + a.v(i, j));
      const double conv = (ue * ue - uw * uw) / dx + (un * vn - us * vs) / dy;
      const double lap =
          (a.u(i + 1, j) - 2.0 * uc + a.u(i - 1, j)) / (dx * dx) +
          (a.u(i, j + 1) - 2.0 * uc + a.u(i, j - 1)) / (dy * dy);
      out[g.u_index(is, j)] = -conv + nu * lap;
    }
  }

  for (int js = 0; js < g.ny; ++js) {
    const int j = js + 1;
    for (int i = 0; i < g.nx; ++i) {
      if (g.is_wall_v(js)) {
        out[g.v_index(i, js)] = 0.0;
        continue;
      }
      const double vc = a.v(i, j);
      const double vn = 0.5 * (vc + a.v(i, j + 1));
      const double vs = 0.5 * (a.v(i, j - 1) + vc);
      const double ve = 0.5 * (vc + a.v(i + 1, j));
      const double vw = 0.5 * (a.v(i - 1, j) + vc);
      const double ue = 0.5 * (a.u(i + 1, j - 1) + a.u(i + 1, j));
      const double uw = 0.5 * (a.u(i, j - 1) + a.u(i, j));
      const double conv = (ue * ve - uw * vw) / dx + (vn * vn - vs * vs) / dy;
      const double lap =
          (a.v(i + 1, j) - 2.0 * vc + a.v(i - 1, j)) / (dx * dx) +
          (a.v(i, j + 1) - 2.0 * vc + a.v(i, j - 1)) / (dy * dy);
      out[g.v_index(i, js)] = -conv + nu * lap;
    }
  }
}

void divergence(const Grid &g, std::span<const double> vel,
                std::span<double> div) {
  const Accessor a{g, vel, 0.0};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      div[j * g.nx + i] = (a.u(i + 1, j) - a.u(i, j)) / g.dx() +
                          (a.v(i, j + 1) - a.v(i, j)) / g.dy();
}

void subtract_gradient(const Grid &g, std::span<const double> p, double scale,
                       std::span<double> vel) {
  auto pc = [&](int i, int j) { return p[j * g.nx + i]; };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.is_wall_u(i))
        vel[g.u_index(i, j)] -= scale * (pc(i + 1, j) - pc(i, j)) / g.dx();
      if (!g.is_wall_v(j))
        vel[g.v_index(i, j)] -= scale * (pc(i, j + 1) - pc(i, j)) / g.dy();
    }
}

void vorticity(const Grid &g, double lid, std::span<const double> vel,
               std::span<double> omega) {
  const Accessor a{g, vel, lid};
  auto corner = [&](int i, int j) {
    return (a.v(i, j) - a.v(i - 1, j)) / g.dx() -
           (a.u(i, j) - a.u(i, j - 1)) / g.dy();
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      omega[j * g.nx + i] = 0.25 * (corner(i, j) + corner(i + 1, j) +
                                    corner(i, j + 1) + corner(i + 1, j + 1));
}

} // namespace adrom::kernels::serial
