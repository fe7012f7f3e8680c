#include "adrom/kernels.hpp"

namespace adrom::kernels {

PaddedVelocity::PaddedVelocity(const Grid &g)
    : g_(g), ustride_(g.nx + 1), vstride_(g.nx + 2),
      u_(static_cast<std::size_t>(g.ny + 2) * (g.nx + 1), 0.0),
      v_(static_cast<std::size_t>(g.ny + 1) * (g.nx + 2), 0.0) {}

void PaddedVelocity::fill(std::span<const double> vel, double lid) {
  const int nx = g_.nx, ny = g_.ny;
  require(vel.size() == g_.size(), "PaddedVelocity: size mismatch");
  const double *us = vel.data();
  const double *vs = vel.data() + g_.cells();

#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    double *row = u_.data() + (j + 1) * ustride_;
    row[0] = 0.0;
    for (int i = 1; i < nx; ++i)
      row[i] = us[j * nx + (i - 1)];
    row[nx] = 0.0;
  }
  {
    double *bottom = u_.data();
    double *first = u_.data() + ustride_;
    double *last = u_.data() + ny * ustride_;
    double *top = u_.data() + (ny + 1) * ustride_;
    for (int i = 0; i <= nx; ++i) {
      bottom[i] = -first[i];
      top[i] = (i == 0 || i == nx) ? 0.0 : 2.0 * lid - last[i];
    }
  }

#pragma omp parallel for schedule(static)
  for (int j = 0; j <= ny; ++j) {
    double *row = v_.data() + j * vstride_;
    if (j == 0 || j == ny) {
      for (int k = 0; k < vstride_; ++k)
        row[k] = 0.0;
      continue;
    }
    for (int i = 0; i < nx; ++i)
      row[i + 1] = vs[(j - 1) * nx + i];
    row[0] = -row[1];
    row[nx + 1] = -row[nx];
  }
}

void momentum(const Grid &g, double nu, const PaddedVelocity &pv,
              std::span<double> out) {
  const int nx = g.nx, ny = g.ny;
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
  const double idx2 = idx * idx, idy2 = idy * idy;
  double *fu = out.data();
  double *fv = out.data() + g.cells();

#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    const double *uc = pv.u_row(j);
    const double *un = pv.u_row(j + 1);
    const double *us = pv.u_row(j - 1);
    const double *vn = pv.v_row(j + 1);
    const double *vs = pv.v_row(j);
    for (int i = 1; i < nx; ++i) {
      const double ue = 0.5 * (uc[i] + uc[i + 1]);
      const double uw = 0.5 * (uc[i - 1] + uc[i]);
      const double unn = 0.5 * (uc[i] + un[i]);
      const double uss = 0.5 * (us[i] + uc[i]);
      const double vnn = 0.5 * (vn[i - 1] + vn[i]);
      const double vss = 0.5 * (vs[i - 1] + vs[i]);
      const double conv = (ue * ue - uw * uw) * idx + (unn * vnn - uss * vss) * idy;
      const double lap = (uc[i + 1] - 2.0 * uc[i] + uc[i - 1]) * idx2 +
                         (un[i] - 2.0 * uc[i] + us[i]) * idy2;
      fu[j * nx + (i - 1)] = -conv + nu * lap;
    }
    fu[j * nx + (nx - 1)] = 0.0;
  }

#pragma omp parallel for schedule(static)
  for (int js = 0; js < ny; ++js) {
    const int j = js + 1;
    if (j == ny) {
      for (int i = 0; i < nx; ++i)
        fv[js * nx + i] = 0.0;
      continue;
    }
    const double *vc = pv.v_row(j);
    const double *vn = pv.v_row(j + 1);
    const double *vs = pv.v_row(j - 1);
    const double *uc = pv.u_row(j);
    const double *ub = pv.u_row(j - 1);
    for (int i = 0; i < nx; ++i) {
      const double vnn = 0.5 * (vc[i] + vn[i]);
      const double vss = 0.5 * (vs[i] + vc[i]);
      const double ve = 0.5 * (vc[i] + vc[i + 1]);
      const double vw = 0.5 * (vc[i - 1] + vc[i]);
      const double ue = 0.5 * (ub[i + 1] + uc[i + 1]);
      const double uw = 0.5 * (ub[i] + uc[i]);
      const double conv = (ue * ve - uw * vw) * idx + (vnn * vnn - vss * vss) * idy;
      const double lap = (vc[i + 1] - 2.0 * vc[i] + vc[i - 1]) * idx2 +
                         (vn[i] - 2.0 * vc[i] + vs[i]) * idy2;
      fv[js * nx + i] = -conv + nu * lap;
    }
  }
}

void divergence(const Grid &g, std::span<const double> vel,
                std::span<double> div) {
  const int nx = g.nx, ny = g.ny;
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
  const double *u = vel.data();
  const double *v = vel.data() + g.cells();

#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    const double *ur = u + j * nx;
    const double *vr = v + j * nx;
    const double *vb = j > 0 ? v + (j - 1) * nx : nullptr;
    for (int i = 0; i < nx; ++i) {
      const double ue = (i == nx - 1) ? 0.0 : ur[i];
      const double uw = (i == 0) ? 0.0 : ur[i - 1];
      const double vn = (j == ny - 1) ? 0.0 : vr[i];
      const double vs = vb ? vb[i] : 0.0;
      div[j * nx + i] = (ue - uw) * idx + (vn - vs) * idy;
    }
  }
}

void subtract_gradient(const Grid &g, std::span<const double> p, double scale,
                       std::span<double> vel) {
  const int nx = g.nx, ny = g.ny;
  const double sx = scale / g.dx(), sy = scale / g.dy();
  double *u = vel.data();
  double *v = vel.data() + g.cells();

#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    const double *pr = p.data() + j * nx;
    for (int i = 0; i + 1 < nx; ++i)
      u[j * nx + i] -= sx * (pr[i + 1] - pr[i]);
    if (j + 1 < ny) {
      const double *pn = p.data() + (j + 1) * nx;
      for (int i = 0; i < nx; ++i)
        v[j * nx + i] -= sy * (pn[i] - pr[i]);
    }
  }
}

void vorticity(const Grid &g, const PaddedVelocity &pv, std::span<double> omega) {
  const int nx = g.nx, ny = g.ny;
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();

#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double sum = 0.0;
      for (int cj = j; cj <= j + 1; ++cj)
        for (int ci = i; ci <= i + 1; ++ci)
          sum += (pv.v(ci, cj) - pv.v(ci - 1, cj)) * idx -
                 (pv.u(ci, cj) - pv.u(ci, cj - 1)) * idy;
      omega[j * nx + i] = 0.25 * sum;
    }
  }
}

} // namespace adrom::kernels
