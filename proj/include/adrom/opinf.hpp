#pragma once

// Operator inference: ridge regression of quadratic latent operators, the
// intrusive-by-probing Galerkin baseline, and the two-stage windowed update.

#include "adrom/basis.hpp"
#include "adrom/latent.hpp"
#include "adrom/window.hpp"

#include <functional>
#include <optional>

namespace adrom {

/// Regression problem: rows of `design` are [z^T, monomials(z)^T, u^T], rows
/// of `targets` the matching dz/dt.
struct RegressionData {
  Mat design;  ///< M x (r + r(r+1)/2 + m)
  Mat targets; ///< M x r
  int r = 0;
  int m = 0;

  static RegressionData build(const Mat &z, const Mat &dz, const Mat &u);
  int samples() const { return static_cast<int>(design.rows()); }
};

/// 1e-8 * trace(D^T D) / cols
double default_lambda(const Mat &design);

struct FitOptions {
  std::optional<double> lambda; ///< default_lambda() when empty
  bool linear_only = false;     ///< drop the quadratic columns (H = 0)
};

struct FitResult {
  PolynomialOperators ops;
  double lambda = 0.0;
  double residual = 0.0; ///< |D Theta - Y|_F^2
};

/// Minimizes |D Theta - Y|_F^2 + lambda |Theta|_F^2 by Householder QR of
/// [D; sqrt(lambda) I]. With lambda = 0 and a rank-deficient design a
/// NumericalError advising lambda > 0 is raised.
FitResult fit(const RegressionData &data, const FitOptions &opt = {});

/// Convenience overload on latent samples (columns are samples).
FitResult fit(const Mat &z, const Mat &dz, const Mat &u, const FitOptions &opt = {});

/// f(x, w) of a full-order model that is at most quadratic in x and affine
/// in w, with f(0, 0) arbitrary.
using FullRhs = std::function<Vec(const Vec &x, double w)>;

/// Petrov-Galerkin operators of a quadratic full-order right-hand side,
///   f_r(z, u) = Psi^T f(D z, u),  D = decoder of `pair`,
/// extracted from right-hand-side evaluations only: linear terms from +-
/// probes along the decoder columns, quadratic terms by polarization, the
/// input operator from a unit-input probe. A check probe verifies that
/// the full-order map has no terms beyond degree two (relative residual
/// above `cubic_tol` raises NumericalError).
PolynomialOperators galerkin_project(const FullRhs &f, const ProjectionPair &pair,
                                     double cubic_tol = 1e-8);

enum class BasisUpdate { windowed_svd, isvd };

struct OpinfAdaptOptions {
  int r = 10;
  FitOptions fit;
  BasisUpdate basis = BasisUpdate::windowed_svd;
};

struct OpinfUpdate {
  ProjectionPair pair;
  PolynomialOperators ops;
  double lambda = 0.0;
  int numerical_rank = 0;
  bool degenerate = false; ///< basis padded with previous directions
  double svd_ms = 0.0;
  double refit_ms = 0.0;
};

/// Stage 1: basis from the window states (windowed SVD, or the supplied
/// incremental factorization when opt.basis is isvd). Directions missing
/// from a rank-deficient window are filled from `previous` when given.
/// Stage 2: encode states and derivatives, then fit.
OpinfUpdate adapt_opinf(const MovingWindow &window, const OpinfAdaptOptions &opt,
                        const Mat *previous = nullptr,
                        const IncrementalSvd *isvd = nullptr);

} // namespace adrom
