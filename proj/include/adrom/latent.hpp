#pragma once

// Quadratic latent dynamics dz/dt = A z + H:(z z^T) + B u and its time
// integration.

#include "adrom/types.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace adrom {

/// Number of unique quadratic monomials z_j z_k (j <= k) in r variables.
constexpr int monomial_count(int r) { return r * (r + 1) / 2; }

/// Position of z_j z_k (j <= k) in the monomial vector: upper triangle,
/// row by row.
constexpr int monomial_index(int r, int j, int k) {
  return j * r - j * (j - 1) / 2 + (k - j);
}

/// [z_0 z_0, z_0 z_1, ..., z_0 z_{r-1}, z_1 z_1, ...]
Vec monomials(const Vec &z);

/// Reduced operators of a quadratic ROM.
///
/// The quadratic tensor is stored through its monomial coefficients
/// `Hm` (r x r(r+1)/2): f_i contains Hm(i, p) z_j z_k for the p-th unique
/// pair (j, k). The symmetric tensor entries are H_ijj = Hm(i, p(j,j)) and
/// H_ijk = H_ikj = Hm(i, p(j,k)) / 2, so trailing-index symmetry holds by
/// construction.
struct PolynomialOperators {
  Mat A;  ///< r x r
  Mat Hm; ///< r x r(r+1)/2
  Mat B;  ///< r x m

  static PolynomialOperators zeros(int r, int m);
  /// Builds from a full r*r*r tensor (index i*r*r + j*r + k), symmetrizing
  /// the trailing pair.
  static PolynomialOperators from_tensor(const Mat &A, const std::vector<double> &H,
                                         const Mat &B);

  int r() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  double h(int i, int j, int k) const;
  /// Full tensor, index i*r*r + j*r + k.
  std::vector<double> tensor() const;

  bool all_finite() const;
  void validate() const;
  /// Frobenius norm of (A, H tensor, B) taken together.
  double norm() const;

  PolynomialOperators &operator+=(const PolynomialOperators &o);
  PolynomialOperators &operator*=(double s);
};

PolynomialOperators operator+(PolynomialOperators a, const PolynomialOperators &b);
PolynomialOperators operator-(PolynomialOperators a, const PolynomialOperators &b);
PolynomialOperators operator*(double s, PolynomialOperators a);

/// f_r(z, u) = A z + H:(z z^T) + B u
Vec eval_rhs(const PolynomialOperators &ops, const Vec &z, const Vec &u);

/// d f_r / d z
Mat rhs_jacobian(const PolynomialOperators &ops, const Vec &z);

/// One AB2 step, z + dt (1.5 f(z) - 0.5 f_prev); explicit Euler when
/// `f_prev` is empty.
Vec step_ab2(const PolynomialOperators &ops, const std::optional<Vec> &f_prev,
             const Vec &z, const Vec &u, double dt);

/// AB2 integrator with caller-owned history. reset() forces the next step
/// to be explicit Euler.
class Ab2Integrator {
public:
  Vec step(const PolynomialOperators &ops, const Vec &z, const Vec &u, double dt);
  void reset() { f_prev_.reset(); }
  bool has_history() const { return f_prev_.has_value(); }

private:
  std::optional<Vec> f_prev_;
};

struct ReducedTrajectory {
  Vec t;   ///< steps+1 times
  Mat z;   ///< r x (steps+1)
  Mat u;   ///< m x (steps+1); column k is the input used at t_k
};

/// Input u(t) for latent rollouts.
using InputFunction = std::function<Vec(double)>;

/// AB2 rollout with an Euler first step; deterministic. Throws
/// NumericalError with the step index on non-finite states.
ReducedTrajectory simulate(const PolynomialOperators &ops, const Vec &z0,
                           const InputFunction &inputs, int steps, double dt,
                           double t0 = 0.0);

// Binary operator record (little-endian):
//   u32 r, u32 m,
//   A   row-major, r*r f64
//   H   symmetric tensor entries H_ijk for i in [0,r), j in [0,r), k in [j,r),
//       in that loop order, r*r(r+1)/2 f64
//   B   row-major, r*m f64
void save_operators(const std::filesystem::path &path, const PolynomialOperators &ops);
PolynomialOperators load_operators(const std::filesystem::path &path);

} // namespace adrom
