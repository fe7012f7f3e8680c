#pragma once

// Trial/test bases and the oblique projector P = Phi (Psi^T Phi)^{-1} Psi^T.

#include "adrom/types.hpp"

#include <optional>

namespace adrom {

/// Flips each column so that its largest-magnitude entry is positive (the
/// first such entry on ties).
void fix_signs(Mat &basis);

/// Orthonormal factor of a thin Householder QR, sign-fixed. Throws
/// NumericalError naming `what` if a column is numerically dependent.
Mat orthonormalize(const Mat &m, const char *what = "matrix");

/// sin of the largest principal angle between the column spans of two
/// orthonormal matrices.
double max_principal_angle_sin(const Mat &a, const Mat &b);

/// Trial basis Phi and test basis Psi, both with orthonormal columns.
class ProjectionPair {
public:
  ProjectionPair() = default;

  /// Orthogonal case Psi = Phi; decode(z) is exactly Phi z.
  static ProjectionPair orthogonal(Mat phi);
  /// General oblique pair. Throws NumericalError when cond(Psi^T Phi) > 1e10.
  static ProjectionPair oblique(Mat phi, Mat psi);

  const Mat &phi() const { return phi_; }
  const Mat &psi() const { return psi_; }
  /// Phi (Psi^T Phi)^{-1}
  const Mat &decoder() const { return decoder_; }
  bool is_orthogonal() const { return orthogonal_; }
  Eigen::Index rank() const { return phi_.cols(); }
  Eigen::Index dim() const { return phi_.rows(); }

  /// Psi^T x, column by column.
  template <class Derived> auto encode(const Eigen::MatrixBase<Derived> &x) const {
    return (psi_.transpose() * x).eval();
  }
  /// Phi (Psi^T Phi)^{-1} z, column by column.
  template <class Derived> auto decode(const Eigen::MatrixBase<Derived> &z) const {
    return (decoder_ * z).eval();
  }
  template <class Derived> auto project(const Eigen::MatrixBase<Derived> &x) const {
    return decode(encode(x));
  }

  /// Largest deviation of Phi^T Phi and Psi^T Psi from the identity.
  double orthonormality_defect() const;

private:
  Mat phi_, psi_, decoder_;
  bool orthogonal_ = false;
};

struct PodResult {
  Mat basis;              ///< n x r, orthonormal, sign-fixed
  Vec singular_values;    ///< leading min(rows, cols) values, descending
  int numerical_rank = 0; ///< columns of `basis` beyond this are padding
};

/// r leading left singular vectors of the snapshot columns, computed by the
/// method of snapshots (Gram matrix eigendecomposition) followed by a QR
/// re-orthonormalization. When the data have fewer than r numerically
/// nonzero singular values the remaining columns are arbitrary orthonormal
/// completions and `numerical_rank` reports the deficiency.
PodResult windowed_pod(const Mat &snaps, int r);

/// Rank-r thin SVD maintained under column appends (Brand's update). The
/// left factor is re-orthonormalized every `reorth_every` updates.
class IncrementalSvd {
public:
  IncrementalSvd() = default;
  IncrementalSvd(const Mat &initial, int r, int reorth_every = 50);

  void update(const Vec &column);

  const Mat &basis() const { return u_; }
  const Vec &singular_values() const { return s_; }
  int rank() const { return r_; }
  long updates() const { return updates_; }

private:
  void reorthonormalize();

  Mat u_;
  Vec s_;
  int r_ = 0;
  int reorth_every_ = 50;
  long updates_ = 0;
};

} // namespace adrom
