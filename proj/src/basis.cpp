#include "adrom/basis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace adrom {
namespace {

Mat thin_q(const Mat &m) {
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

} // namespace

void fix_signs(Mat &basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double a = std::abs(basis(i, c));
      if (a > mag) {
        mag = a;
        best = i;
      }
    }
    if (basis(best, c) < 0)
      basis.col(c) = -basis.col(c);
  }
}

Mat orthonormalize(const Mat &m, const char *what) {
  Eigen::HouseholderQR<Mat> qr(m);
  const auto &r = qr.matrixQR();
  const Eigen::Index k = std::min(m.rows(), m.cols());
  double rmax = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    rmax = std::max(rmax, std::abs(r(i, i)));
  for (Eigen::Index i = 0; i < k; ++i)
    if (!(std::abs(r(i, i)) > 1e-13 * rmax) || !std::isfinite(r(i, i))) {
      std::ostringstream os;
      os << "QR breakdown in " << what << ": column " << i
         << " is numerically dependent";
      throw NumericalError(os.str());
    }
  Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
  fix_signs(q);
  return q;
}

double max_principal_angle_sin(const Mat &a, const Mat &b) {
  require(a.rows() == b.rows(), "principal angle: dimension mismatch");
  const Mat resid = b - a * (a.transpose() * b);
  if (resid.cols() == 0)
    return 0.0;
  Eigen::JacobiSVD<Mat> svd(resid);
  return std::min(1.0, svd.singularValues()(0));
}

ProjectionPair ProjectionPair::orthogonal(Mat phi) {
  ProjectionPair p;
  p.psi_ = phi;
  p.decoder_ = phi;
  p.phi_ = std::move(phi);
  p.orthogonal_ = true;
  return p;
}

ProjectionPair ProjectionPair::oblique(Mat phi, Mat psi) {
  require(phi.rows() == psi.rows() && phi.cols() == psi.cols(),
          "ProjectionPair: Phi and Psi shapes differ");
  require(phi.cols() >= 1, "ProjectionPair: empty basis");
  const Mat s = psi.transpose() * phi;
  Eigen::JacobiSVD<Mat> svd(s);
  const Vec &sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0 ? sv(0) / smin : INFINITY;
  if (!(smin > 1e-10) || !(cond <= 1e10)) {
    std::ostringstream os;
    os << "ProjectionPair: Psi^T Phi is ill-conditioned (cond = " << cond
       << ", smallest singular value = " << smin << ")";
    throw NumericalError(os.str());
  }
  ProjectionPair p;
  p.decoder_ = s.transpose().partialPivLu().solve(phi.transpose()).transpose();
  p.phi_ = std::move(phi);
  p.psi_ = std::move(psi);
  return p;
}

double ProjectionPair::orthonormality_defect() const {
  const Eigen::Index r = rank();
  const Mat eye = Mat::Identity(r, r);
  const double a = (phi_.transpose() * phi_ - eye).cwiseAbs().maxCoeff();
  const double b = (psi_.transpose() * psi_ - eye).cwiseAbs().maxCoeff();
  return std::max(a, b);
}

PodResult windowed_pod(const Mat &snaps, int r) {
  const Eigen::Index n = snaps.rows(), m = snaps.cols();
  require(r >= 1 && r <= std::min(n, m),
          "windowed_pod: rank exceeds min(rows, columns)");

  PodResult out;
  Mat u(n, r);
  Vec sigma;
  const Eigen::Index k = std::min(n, m);
  if (m <= n) {
    // Method of snapshots.
    const Mat gram = snaps.transpose() * snaps;
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const Vec lam = es.eigenvalues().reverse();
    const Mat vecs = es.eigenvectors().rowwise().reverse();
    sigma = lam.cwiseMax(0.0).cwiseSqrt();
    const double floor = lam(0) * static_cast<double>(m) * 1e-14;
    out.numerical_rank = 0;
    for (Eigen::Index c = 0; c < k; ++c)
      if (lam(c) > floor && lam(c) > 0)
        ++out.numerical_rank;
    for (int c = 0; c < r; ++c)
      u.col(c) = c < out.numerical_rank ? Vec(snaps * vecs.col(c) / sigma(c))
                                        : Vec::Zero(n);
  } else {
    const Mat gram = snaps * snaps.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const Vec lam = es.eigenvalues().reverse();
    const Mat vecs = es.eigenvectors().rowwise().reverse();
    sigma = lam.cwiseMax(0.0).cwiseSqrt();
    const double floor = lam(0) * static_cast<double>(n) * 1e-14;
    out.numerical_rank = 0;
    for (Eigen::Index c = 0; c < k; ++c)
      if (lam(c) > floor && lam(c) > 0)
        ++out.numerical_rank;
    for (int c = 0; c < r; ++c)
      u.col(c) = c < out.numerical_rank ? Vec(vecs.col(c)) : Vec::Zero(n);
  }
  out.singular_values = sigma.head(k);
  out.basis = thin_q(u);
  fix_signs(out.basis);
  return out;
}

IncrementalSvd::IncrementalSvd(const Mat &initial, int r, int reorth_every)
    : r_(r), reorth_every_(reorth_every) {
  require(reorth_every >= 1, "IncrementalSvd: reorth_every must be positive");
  PodResult pod = windowed_pod(initial, r);
  u_ = std::move(pod.basis);
  s_ = Vec::Zero(r);
  for (int c = 0; c < std::min<int>(r, pod.numerical_rank); ++c)
    s_(c) = pod.singular_values(c);
}

void IncrementalSvd::update(const Vec &c) {
  require(c.size() == u_.rows(), "IncrementalSvd: column length mismatch");
  ++updates_;
  const double cn = c.norm();
  if (cn == 0.0)
    return;

  // Component along the current basis and orthogonal remainder, with one
  // step of reorthogonalization.
  Vec p = u_.transpose() * c;
  Vec e = c - u_ * p;
  const Vec p2 = u_.transpose() * e;
  p += p2;
  e -= u_ * p2;
  const double rho = e.norm();

  if (rho <= 1e-12 * cn) {
    Mat k(r_, r_ + 1);
    k.leftCols(r_) = s_.asDiagonal();
    k.col(r_) = p;
    Eigen::JacobiSVD<Mat> svd(k, Eigen::ComputeFullU);
    u_ = u_ * svd.matrixU();
    s_ = svd.singularValues().head(r_);
  } else {
    Mat k = Mat::Zero(r_ + 1, r_ + 1);
    k.topLeftCorner(r_, r_) = s_.asDiagonal();
    k.topRightCorner(r_, 1) = p;
    k(r_, r_) = rho;
    Eigen::JacobiSVD<Mat> svd(k, Eigen::ComputeFullU);
    Mat ext(u_.rows(), r_ + 1);
    ext.leftCols(r_) = u_;
    ext.col(r_) = e / rho;
    u_ = ext * svd.matrixU().leftCols(r_);
    s_ = svd.singularValues().head(r_);
  }
  if (updates_ % reorth_every_ == 0)
    reorthonormalize();
  fix_signs(u_);
}

void IncrementalSvd::reorthonormalize() {
  Eigen::HouseholderQR<Mat> qr(u_);
  const Mat q = qr.householderQ() * Mat::Identity(u_.rows(), r_);
  const Mat rfac = qr.matrixQR().topRows(r_).triangularView<Eigen::Upper>();
  const Mat rs = rfac * s_.asDiagonal();
  Eigen::JacobiSVD<Mat> svd(rs, Eigen::ComputeFullU);
  u_ = q * svd.matrixU();
  s_ = svd.singularValues();
}

} // namespace adrom
