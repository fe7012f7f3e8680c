#include "adrom/cavity.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace adrom {

double ForcingConfig::signal(double t) const {
  return amplitude * std::sin(frequency * t);
}

void ForcingConfig::validate() const {
  require(amplitude > 0 && frequency > 0 && stiffness > 0,
          "ForcingConfig: amplitude, frequency and stiffness must be positive");
  require(xc > 0 && xc < 1 && yc > 0 && yc < 1,
          "ForcingConfig: center must lie inside the unit square");
}

double forcing_signal(double t) { return ForcingConfig{}.signal(t); }

Vec input_map(const Grid &g, const ForcingConfig &f) {
  Vec b = Vec::Zero(static_cast<Eigen::Index>(g.size()));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (g.is_wall_u(i))
        continue;
      const double rx = g.u_x(i) - f.xc, ry = g.u_y(j) - f.yc;
      const double val = std::exp(-f.stiffness * (rx * rx + ry * ry));
      b[static_cast<Eigen::Index>(g.u_index(i, j))] =
          val < std::numeric_limits<double>::min() ? 0.0 : val;
    }
  return b;
}

CavitySolver::CavitySolver(const Grid &g, const CavityParams &p,
                           const ForcingConfig &f)
    : grid_(g), params_(p), forcing_(f), input_(input_map(g, f)), poisson_(g),
      padded_(g), div_(g.cells()), pressure_(g.cells()) {
  require(p.re > 0, "CavitySolver: Reynolds number must be positive");
  require(p.dt > 0, "CavitySolver: time step must be positive");
  f.validate();
}

Vec CavitySolver::momentum(const Vec &V, double lid) {
  require(static_cast<std::size_t>(V.size()) == size(), "momentum: size mismatch");
  Vec out(V.size());
  padded_.fill({V.data(), size()}, lid);
  kernels::momentum(grid_, 1.0 / params_.re, padded_, {out.data(), size()});
  return out;
}

Vec CavitySolver::project(const Vec &v) {
  require(static_cast<std::size_t>(v.size()) == size(), "project: size mismatch");
  Vec out = v;
  kernels::divergence(grid_, {out.data(), size()}, div_);
  poisson_.solve(div_, pressure_);
  kernels::subtract_gradient(grid_, pressure_, 1.0, {out.data(), size()});
  return out;
}

double CavitySolver::max_divergence(const Vec &v) const {
  std::vector<double> div(grid_.cells());
  kernels::divergence(grid_, {v.data(), size()}, div);
  double m = 0.0;
  for (double d : div)
    m = std::max(m, std::abs(d));
  return m;
}

Vec CavitySolver::full_rhs(const Vec &V, double w) {
  Vec F = momentum(V, params_.lid);
  if (w != 0.0)
    F += w * input_;
  return project(F);
}

SteadyStateResult CavitySolver::steady_state(const SteadyStateOptions &opt,
                                             const Vec &initial) {
  SteadyStateResult res;
  Vec V = initial.size() ? initial : Vec::Zero(static_cast<Eigen::Index>(size()));
  require(static_cast<std::size_t>(V.size()) == size(), "steady_state: size mismatch");
  const double dt = params_.dt;
  Vec F_prev;
  for (long k = 0;; ++k) {
    Vec F = momentum(V, params_.lid);
    if (k % opt.check_every == 0) {
      const double vn = V.norm();
      const double r = vn > 0 ? project(F).norm() / vn : INFINITY;
      res.history.emplace_back(k, r);
      if (!std::isfinite(r) && vn != 0.0)
        throw SteadyStateError("steady_state: non-finite residual at step " +
                                   std::to_string(k),
                               res.history);
      if (r < opt.tol) {
        res.field = std::move(V);
        res.steps = k;
        res.residual = r;
        return res;
      }
    }
    if (k >= opt.max_steps) {
      std::ostringstream os;
      os << "steady_state: no convergence within " << opt.max_steps
         << " steps (last residual " << res.history.back().second << ")";
      throw SteadyStateError(os.str(), res.history);
    }
    Vec Vs = F_prev.size() ? Vec(V + dt * (1.5 * F - 0.5 * F_prev)) : Vec(V + dt * F);
    V = project(Vs);
    F_prev = std::move(F);
  }
}

void CavitySolver::set_base_flow(const Vec &vbar) {
  require(static_cast<std::size_t>(vbar.size()) == size(), "set_base_flow: size mismatch");
  base_ = vbar;
  base_force_ = momentum(base_, params_.lid);
  have_prev_ = false;
}

Vec CavitySolver::fluctuation_force(const Vec &x, double w) {
  if (!has_base_flow())
    throw PreconditionError("CavitySolver: base flow not set");
  require(static_cast<std::size_t>(x.size()) == size(), "fluctuation: size mismatch");
  Vec V = base_ + x;
  Vec F = momentum(V, params_.lid) - base_force_;
  if (w != 0.0)
    F += w * input_;
  return F;
}

Vec CavitySolver::rhs_fluctuation(const Vec &x, double w) {
  Vec f = project(fluctuation_force(x, w));
  if (!f.allFinite())
    throw NumericalError("rhs_fluctuation: non-finite values");
  return f;
}

Vec CavitySolver::step(const Vec &x, double t) {
  return step_with_input(x, forcing_.signal(t));
}

Vec CavitySolver::step_with_input(const Vec &x, double w) {
  Vec F = fluctuation_force(x, w);
  const double dt = params_.dt;
  Vec xs = have_prev_ ? Vec(x + dt * (1.5 * F - 0.5 * prev_force_)) : Vec(x + dt * F);
  Vec next = project(xs);
  ++steps_taken_;
  if (!next.allFinite())
    throw NumericalError("CavitySolver::step: non-finite state at step " +
                         std::to_string(steps_taken_));
  prev_force_ = std::move(F);
  have_prev_ = true;
  return next;
}

} // namespace adrom
