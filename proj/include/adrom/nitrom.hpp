#pragma once

// Trajectory-based joint optimization of the trial subspace (Grassmann),
// the test basis (Stiefel) and the quadratic latent operators.
//
// Cost on a window of samples x_j at fine steps s_j (s_0 = 0):
//   J = (1/M) sum_j |x_j - D z_{s_j}|^2,  D = Phi (Psi^T Phi)^{-1},
// where z_0 = Psi^T x_0 and z_k follows the AB2 rollout (Euler first step)
// with step dt and input u(t_0 + k dt). The gradient is the exact discrete
// adjoint of that rollout.

#include "adrom/basis.hpp"
#include "adrom/latent.hpp"
#include "adrom/opinf.hpp"
#include "adrom/window.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <vector>

namespace adrom {

struct NitromParams {
  ProjectionPair pair;
  PolynomialOperators ops;

  /// Orthogonal pair Psi = Phi, e.g. from a POD basis.
  static NitromParams from_basis(const Mat &phi, PolynomialOperators ops);
  static NitromParams from_opinf(const OpinfUpdate &u);
};

/// Windowed trajectory data and rollout settings.
struct NitromProblem {
  Mat X;                        ///< n x M samples
  std::vector<int> sample_step; ///< fine-step index of each sample, nondecreasing, first 0
  double t0 = 0.0;              ///< time of fine step 0
  double dt = 0.0;              ///< fine step
  InputFunction input;          ///< u(t); may be empty when m = 0

  /// Samples every `stride` fine steps starting at t0.
  static NitromProblem uniform(Mat X, int stride, double t0, double dt, InputFunction input);
  /// From a window with spacing that is an integer multiple of dt.
  static NitromProblem from_window(const MovingWindow &w, double dt, InputFunction input);

  int samples() const { return static_cast<int>(X.cols()); }
  int steps() const { return sample_step.empty() ? 0 : sample_step.back(); }
  void validate() const;
};

/// Tangent vector at NitromParams: horizontal Phi part, Stiefel-tangent Psi
/// part, Euclidean operator part (monomial coordinates).
struct TangentUpdate {
  Mat dphi;
  Mat dpsi;
  PolynomialOperators dops;

  static TangentUpdate zeros_like(const NitromParams &p);
  double dot(const TangentUpdate &o) const;
  double norm() const { return std::sqrt(dot(*this)); }
  TangentUpdate &operator*=(double s);
  TangentUpdate &operator+=(const TangentUpdate &o);

  /// max(|Phi^T dphi|, |Psi^T dpsi + dpsi^T Psi|), entrywise.
  double tangency_residual(const NitromParams &p) const;
};

/// Orthogonal projection of an ambient direction onto the tangent space.
TangentUpdate project_tangent(const NitromParams &p, TangentUpdate ambient);

struct CostValue {
  double J = 0.0;
  bool blown_up = false;
};

CostValue cost(const NitromParams &p, const NitromProblem &prob);

struct GradientValue {
  CostValue cost;
  TangentUpdate grad; ///< Riemannian gradient (zero when blown up)
};

GradientValue gradient(const NitromParams &p, const NitromProblem &prob);

/// Orthonormal factor of a thin QR with positive R diagonal. Throws
/// NumericalError naming `what` on breakdown.
Mat qf(const Mat &m, const char *what);

/// Phi' = qf(Phi + s dPhi), Psi' = qf(Psi + s dPsi), ops' = ops + s dops.
/// s = 0 returns `p` unchanged. Throws NumericalError on QR breakdown or an
/// ill-conditioned Psi'^T Phi'.
NitromParams retract(const NitromParams &p, const TangentUpdate &dir, double step);

struct OptimizeOptions {
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 30;
  bool freeze_quadratic = false; ///< keep H fixed (linear-only ablation)
  /// Called with every accepted iterate and its iteration number.
  std::function<void(const NitromParams &, int)> on_accept;
};

struct IterationRecord {
  int iter = 0;
  double J = 0.0;
  double step = 0.0;
  int backtracks = 0;
};

struct OptimizeResult {
  NitromParams params;
  std::vector<IterationRecord> history; ///< entry point first, then accepted steps
  bool stalled = false;
  bool blown_up = false; ///< entry point already blown up
  int gradient_evals = 0;
  int cost_evals = 0;
  double entry_J() const { return history.front().J; }
  double exit_J() const { return history.back().J; }
};

/// K iterations of Riemannian gradient descent with Armijo backtracking.
/// The first trial step is 1/(1+|grad|), later ones twice the previous
/// accepted step. Stops early with `stalled` after max_backtracks rejections.
OptimizeResult optimize(const NitromParams &p0, const NitromProblem &prob, int K,
                        const OptimizeOptions &opt = {});

/// Warm-started optimize; K >= 1.
OptimizeResult adapt_nitrom(const NitromParams &prev, const NitromProblem &prob, int K,
                            const OptimizeOptions &opt = {});

struct HybridResult {
  OpinfUpdate opinf;
  OptimizeResult opt; ///< history empty when K_refine = 0
  NitromParams params;
};

/// adapt_opinf on the window, lifted to Phi = Psi = new basis, followed by
/// K_refine optimize iterations on the same window.
HybridResult hybrid_adapt(const MovingWindow &window, const NitromProblem &prob,
                          const OpinfAdaptOptions &opinf_opt, int K_refine,
                          const Mat *previous_basis = nullptr,
                          const OptimizeOptions &opt = {});

/// Appends rows event,iter,J,step,backtracks (writes the header when the
/// file is new).
void append_history_csv(const std::filesystem::path &path, int event,
                        const std::vector<IterationRecord> &history);

} // namespace adrom
