#pragma once

// Full-order model: 2-D incompressible lid-driven cavity on a staggered grid,
// second-order central finite volumes, explicit AB2 in time, and an exact
// discrete pressure projection.

#include "adrom/grid.hpp"
#include "adrom/kernels.hpp"
#include "adrom/poisson.hpp"

#include <utility>
#include <vector>

namespace adrom {

/// Localized sinusoidal x-momentum forcing B(x,y) w(t).
struct ForcingConfig {
  double amplitude = 0.1;
  double frequency = 4.0;
  double xc = 0.95;
  double yc = 0.95;
  double stiffness = 5000.0;

  double signal(double t) const;
  void validate() const;
};

/// w(t) = 0.1 sin(4t) for the reference forcing.
double forcing_signal(double t);

/// exp{-k((x-xc)^2 + (y-yc)^2)} on interior u-faces; zero on v-faces and on
/// the wall faces. Values below the smallest normal double are flushed to 0.
Vec input_map(const Grid &g, const ForcingConfig &f = {});

struct CavityParams {
  double re = 8300.0;
  double lid = 1.0;
  double dt = 0.0025;
};

struct SteadyStateOptions {
  double tol = 1e-12;       ///< on |dV/dt| / |V|
  long max_steps = 4'000'000;
  int check_every = 100;
};

struct SteadyStateResult {
  Vec field;
  long steps = 0;
  double residual = 0.0;
  std::vector<std::pair<long, double>> history; ///< (step, residual)
};

/// Raised when the pseudo-time march exhausts its step budget.
class SteadyStateError : public NumericalError {
public:
  SteadyStateError(const std::string &what,
                   std::vector<std::pair<long, double>> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<std::pair<long, double>> &history() const { return history_; }

private:
  std::vector<std::pair<long, double>> history_;
};

/// Cavity solver. Holds mutable workspaces and the AB2 history, so an
/// instance must not be shared between threads; distinct instances are
/// independent.
///
/// The reduced-order machinery works with fluctuations x = V - Vbar about
/// the steady base flow. The fluctuation dynamics are
///   dx/dt = P[F(Vbar + x) - F(Vbar) + w(t) b],
/// i.e. the base-flow residual F(Vbar) is removed so that x = 0 is an exact
/// fixed point of the unforced system.
class CavitySolver {
public:
  explicit CavitySolver(const Grid &g = {}, const CavityParams &p = {},
                        const ForcingConfig &f = {});

  const Grid &grid() const { return grid_; }
  const CavityParams &params() const { return params_; }
  const ForcingConfig &forcing() const { return forcing_; }
  double dt() const { return params_.dt; }
  std::size_t size() const { return grid_.size(); }
  const Vec &input() const { return input_; }

  /// Unprojected -div(VV) + lap(V)/Re for a full field with lid velocity `lid`.
  Vec momentum(const Vec &V, double lid);
  /// Discrete Leray projection.
  Vec project(const Vec &v);
  /// Largest absolute cell divergence (walls included through zero normal flux).
  double max_divergence(const Vec &v) const;
  /// dV/dt = P[F(V) + w b] for a full field.
  Vec full_rhs(const Vec &V, double w);

  /// Unforced pseudo-time march from `initial` (rest when empty) until
  /// |dV/dt|/|V| < tol. Throws SteadyStateError on budget exhaustion.
  SteadyStateResult steady_state(const SteadyStateOptions &opt = {},
                                 const Vec &initial = Vec());

  void set_base_flow(const Vec &vbar);
  const Vec &base_flow() const { return base_; }
  bool has_base_flow() const { return base_.size() == static_cast<Eigen::Index>(size()); }

  /// Fluctuation dynamics f(x, w); see class comment.
  Vec rhs_fluctuation(const Vec &x, double w);

  /// Advances the fluctuation x from t to t+dt (forcing evaluated at t).
  /// Uses AB2 when history is valid, explicit Euler otherwise.
  Vec step(const Vec &x, double t);
  /// Same as step() with an explicit forcing value.
  Vec step_with_input(const Vec &x, double w);
  void reset_history() { have_prev_ = false; }
  bool has_history() const { return have_prev_; }
  /// Number of fluctuation steps performed by this instance.
  long steps_taken() const { return steps_taken_; }

private:
  Vec fluctuation_force(const Vec &x, double w);

  Grid grid_;
  CavityParams params_;
  ForcingConfig forcing_;
  Vec input_;
  Vec base_;
  Vec base_force_;
  NeumannPoisson poisson_;
  kernels::PaddedVelocity padded_;
  std::vector<double> div_;
  std::vector<double> pressure_;
  Vec prev_force_;
  bool have_prev_ = false;
  long steps_taken_ = 0;
};

} // namespace adrom
