#pragma once

#include "adrom/grid.hpp"

#include <memory>
#include <span>

namespace adrom {

/// Direct solver for the cell-centered 5-point Laplacian with homogeneous
/// Neumann conditions on the unit square. The operator is diagonalized by a
/// two-dimensional DCT-II; the constant nullspace is removed by pinning the
/// mean of the solution to zero.
///
/// Owns FFTW plans: construct instances from one thread at a time.
class NeumannPoisson {
public:
  explicit NeumannPoisson(const Grid &g);
  ~NeumannPoisson();
  NeumannPoisson(NeumannPoisson &&) noexcept;
  NeumannPoisson &operator=(NeumannPoisson &&) noexcept;
  NeumannPoisson(const NeumannPoisson &) = delete;
  NeumannPoisson &operator=(const NeumannPoisson &) = delete;

  /// Solves lap(p) = rhs. The mean of rhs is discarded.
  void solve(std::span<const double> rhs, std::span<double> p);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace adrom
