#pragma once

#include "adrom/latent.hpp"
#include "adrom/types.hpp"

#include <Eigen/QR>

#include <random>

namespace testing {

using adrom::Mat;
using adrom::Vec;

inline Mat randn(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd;
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = nd(rng);
  return m;
}

inline Vec randn(std::mt19937_64 &rng, Eigen::Index n) { return randn(rng, n, 1).col(0); }

inline Mat random_orthonormal(std::mt19937_64 &rng, Eigen::Index n, Eigen::Index r) {
  Eigen::HouseholderQR<Mat> qr(randn(rng, n, r));
  return qr.householderQ() * Mat::Identity(n, r);
}

inline adrom::PolynomialOperators random_ops(std::mt19937_64 &rng, int r, int m,
                                             double scale = 1.0) {
  auto ops = adrom::PolynomialOperators::zeros(r, m);
  ops.A = scale * randn(rng, r, r);
  ops.Hm = scale * randn(rng, r, adrom::monomial_count(r));
  ops.B = scale * randn(rng, r, m);
  return ops;
}

inline double rel_err(const Mat &a, const Mat &b) { return (a - b).norm() / b.norm(); }

} // namespace testing
