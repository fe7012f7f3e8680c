#include "adrom/opinf.hpp"

#include "adrom/log.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <sstream>

namespace adrom {
namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

Mat design_columns(const RegressionData &d, bool linear_only) {
  if (!linear_only)
    return d.design;
  Mat out(d.design.rows(), d.r + d.m);
  out.leftCols(d.r) = d.design.leftCols(d.r);
  out.rightCols(d.m) = d.design.rightCols(d.m);
  return out;
}

} // namespace

RegressionData RegressionData::build(const Mat &z, const Mat &dz, const Mat &u) {
  require(z.cols() >= 1, "RegressionData: no samples");
  require(dz.rows() == z.rows() && dz.cols() == z.cols(),
          "RegressionData: derivative shape differs from latent shape");
  require(u.cols() == z.cols(), "RegressionData: input count differs from sample count");
  RegressionData d;
  d.r = static_cast<int>(z.rows());
  d.m = static_cast<int>(u.rows());
  const int s = monomial_count(d.r);
  d.design.resize(z.cols(), d.r + s + d.m);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const Vec zj = z.col(j);
    d.design.row(j).head(d.r) = zj.transpose();
    d.design.row(j).segment(d.r, s) = monomials(zj).transpose();
    d.design.row(j).tail(d.m) = u.col(j).transpose();
  }
  d.targets = dz.transpose();
  return d;
}

double default_lambda(const Mat &design) {
  return 1e-8 * design.squaredNorm() / static_cast<double>(design.cols());
}

FitResult fit(const RegressionData &data, const FitOptions &opt) {
  require(data.samples() >= 1, "fit: no samples");
  const Mat D = design_columns(data, opt.linear_only);
  const Eigen::Index c = D.cols();
  const double lambda = opt.lambda ? *opt.lambda : default_lambda(D);
  require(D.allFinite() && data.targets.allFinite(), "fit: non-finite data");
  if (!std::isfinite(lambda) && !opt.lambda)
    throw NumericalError("fit: design matrix norm overflows (diverged latent data)");
  require(lambda >= 0.0 && std::isfinite(lambda), "fit: lambda must be finite and >= 0");

  Mat theta; // c x r
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Mat> qr(D);
    if (qr.rank() < c) {
      std::ostringstream os;
      os << "fit: design matrix is rank deficient (rank " << qr.rank() << " of " << c
         << " columns) and lambda = 0; use lambda > 0";
      throw NumericalError(os.str());
    }
    theta = qr.solve(data.targets);
  } else {
    Mat aug(D.rows() + c, c);
    aug.topRows(D.rows()) = D;
    aug.bottomRows(c) = std::sqrt(lambda) * Mat::Identity(c, c);
    Mat rhs = Mat::Zero(D.rows() + c, data.r);
    rhs.topRows(D.rows()) = data.targets;
    theta = aug.householderQr().solve(rhs);
  }
  if (!theta.allFinite())
    throw NumericalError("fit: non-finite solution");

  FitResult out;
  out.lambda = lambda;
  out.residual = (D * theta - data.targets).squaredNorm();
  out.ops = PolynomialOperators::zeros(data.r, data.m);
  out.ops.A = theta.topRows(data.r).transpose();
  out.ops.B = theta.bottomRows(data.m).transpose();
  if (!opt.linear_only)
    out.ops.Hm = theta.middleRows(data.r, monomial_count(data.r)).transpose();
  return out;
}

FitResult fit(const Mat &z, const Mat &dz, const Mat &u, const FitOptions &opt) {
  return fit(RegressionData::build(z, dz, u), opt);
}

PolynomialOperators galerkin_project(const FullRhs &f, const ProjectionPair &pair,
                                     double cubic_tol) {
  const Mat &D = pair.decoder();
  const Mat &psi = pair.psi();
  const int r = static_cast<int>(D.cols());
  const Eigen::Index n = D.rows();
  auto ops = PolynomialOperators::zeros(r, 1);

  const Vec f0 = f(Vec::Zero(n), 0.0);
  Mat lin(n, r);                          // L d_j
  Mat quad(n, monomial_count(r));         // Q(d_j, d_k), j <= k
  for (int j = 0; j < r; ++j) {
    const Vec fp = f(D.col(j), 0.0);
    const Vec fm = f(-D.col(j), 0.0);
    lin.col(j) = 0.5 * (fp - fm);
    quad.col(monomial_index(r, j, j)) = 0.5 * (fp + fm) - f0;
  }
  for (int j = 0; j < r; ++j)
    for (int k = j + 1; k < r; ++k) {
      // Q(a+b, a+b) = Q(a,a) + Q(b,b) + 2 Q(a,b)
      const Vec fs = f(D.col(j) + D.col(k), 0.0);
      const Vec qsum = fs - f0 - lin.col(j) - lin.col(k);
      quad.col(monomial_index(r, j, k)) =
          0.5 * (qsum - quad.col(monomial_index(r, j, j)) - quad.col(monomial_index(r, k, k)));
    }
  const Vec bfull = f(Vec::Zero(n), 1.0) - f0;

  ops.A = psi.transpose() * lin;
  for (int j = 0; j < r; ++j)
    for (int k = j; k < r; ++k) {
      const int p = monomial_index(r, j, k);
      ops.Hm.col(p) = (j == k ? 1.0 : 2.0) * (psi.transpose() * quad.col(p));
    }
  ops.B.col(0) = psi.transpose() * bfull;

  // Degree check on a generic direction: anything not explained by the
  // constant, linear and quadratic parts is higher order.
  Vec zc(r);
  for (int j = 0; j < r; ++j)
    zc(j) = 1.0 / (j + 1.0) * ((j % 2) ? -1.0 : 1.0);
  const Vec fc = f(D * zc, 0.0);
  Vec model = f0 + lin * zc;
  for (int j = 0; j < r; ++j)
    for (int k = j; k < r; ++k) {
      const int p = monomial_index(r, j, k);
      model += (j == k ? 1.0 : 2.0) * zc(j) * zc(k) * quad.col(p);
    }
  const double scale = std::max({fc.norm(), (fc - f0).norm(), 1e-300});
  const double resid = (fc - model).norm() / scale;
  if (!(resid <= cubic_tol)) {
    std::ostringstream os;
    os << "galerkin_project: probe residual " << resid
       << " exceeds tolerance; the right-hand side is not quadratic";
    throw NumericalError(os.str());
  }
  ops.validate();
  return ops;
}

OpinfUpdate adapt_opinf(const MovingWindow &window, const OpinfAdaptOptions &opt,
                        const Mat *previous, const IncrementalSvd *isvd) {
  require(window.size() >= 2, "adapt_opinf: window needs at least two samples");
  OpinfUpdate out;
  const Mat X = window.states();

  auto t0 = std::chrono::steady_clock::now();
  Mat basis;
  if (opt.basis == BasisUpdate::isvd) {
    require(isvd != nullptr && isvd->rank() == opt.r,
            "adapt_opinf: incremental SVD state of rank r required");
    basis = isvd->basis();
    out.numerical_rank = opt.r;
    for (int c = 0; c < opt.r; ++c)
      if (!(isvd->singular_values()(c) > 0))
        --out.numerical_rank;
  } else {
    const int rr = std::min<int>(opt.r, static_cast<int>(X.cols()));
    PodResult pod = windowed_pod(X, rr);
    out.numerical_rank = std::min(pod.numerical_rank, rr);
    basis = std::move(pod.basis);
  }
  if (out.numerical_rank < opt.r) {
    out.degenerate = true;
    const int k = out.numerical_rank;
    std::ostringstream os;
    os << "adapt_opinf: window has numerical rank " << k << " < r = " << opt.r;
    Mat combined = Mat::Zero(X.rows(), opt.r);
    combined.leftCols(k) = basis.leftCols(k);
    if (previous != nullptr && previous->cols() == opt.r && previous->rows() == X.rows()) {
      const Mat uk = basis.leftCols(k);
      const Mat rest = *previous - uk * (uk.transpose() * *previous);
      combined.rightCols(opt.r - k) = windowed_pod(rest, opt.r - k).basis;
      basis = orthonormalize(combined, "degenerate window basis");
      os << "; filling from previous basis";
    } else {
      Eigen::HouseholderQR<Mat> qr(combined);
      basis = qr.householderQ() * Mat::Identity(X.rows(), opt.r);
      fix_signs(basis);
      os << "; completing with arbitrary orthonormal directions";
    }
    log_warning(os.str());
  }
  out.svd_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  out.pair = ProjectionPair::orthogonal(std::move(basis));
  const Mat z = out.pair.encode(X);
  const Mat dz = out.pair.encode(window.derivatives());
  FitResult fr = fit(z, dz, window.inputs(), opt.fit);
  out.ops = std::move(fr.ops);
  out.lambda = fr.lambda;
  out.refit_ms = ms_since(t0);
  return out;
}

} // namespace adrom
