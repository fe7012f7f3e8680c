#include "adrom/latent.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

namespace adrom {

Vec monomials(const Vec &z) {
  const int r = static_cast<int>(z.size());
  Vec m(monomial_count(r));
  int p = 0;
  for (int j = 0; j < r; ++j)
    for (int k = j; k < r; ++k)
      m(p++) = z(j) * z(k);
  return m;
}

PolynomialOperators PolynomialOperators::zeros(int r, int m) {
  require(r >= 1 && m >= 0, "PolynomialOperators: bad dimensions");
  return {Mat::Zero(r, r), Mat::Zero(r, monomial_count(r)), Mat::Zero(r, m)};
}

PolynomialOperators PolynomialOperators::from_tensor(const Mat &A,
                                                     const std::vector<double> &H,
                                                     const Mat &B) {
  const int r = static_cast<int>(A.rows());
  require(A.cols() == r && B.rows() == r, "from_tensor: dimension mismatch");
  require(H.size() == static_cast<std::size_t>(r) * r * r, "from_tensor: tensor size");
  PolynomialOperators ops{A, Mat::Zero(r, monomial_count(r)), B};
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = j; k < r; ++k) {
        const double hjk = H[(static_cast<std::size_t>(i) * r + j) * r + k];
        const double hkj = H[(static_cast<std::size_t>(i) * r + k) * r + j];
        ops.Hm(i, monomial_index(r, j, k)) = (j == k) ? hjk : hjk + hkj;
      }
  return ops;
}

double PolynomialOperators::h(int i, int j, int k) const {
  const int rr = r();
  if (j > k)
    std::swap(j, k);
  const double c = Hm(i, monomial_index(rr, j, k));
  return j == k ? c : 0.5 * c;
}

std::vector<double> PolynomialOperators::tensor() const {
  const int rr = r();
  std::vector<double> t(static_cast<std::size_t>(rr) * rr * rr);
  for (int i = 0; i < rr; ++i)
    for (int j = 0; j < rr; ++j)
      for (int k = 0; k < rr; ++k)
        t[(static_cast<std::size_t>(i) * rr + j) * rr + k] = h(i, j, k);
  return t;
}

bool PolynomialOperators::all_finite() const {
  return A.allFinite() && Hm.allFinite() && B.allFinite();
}

void PolynomialOperators::validate() const {
  const int rr = r();
  require(A.cols() == rr && Hm.rows() == rr && Hm.cols() == monomial_count(rr) &&
              B.rows() == rr,
          "PolynomialOperators: inconsistent dimensions");
  if (!all_finite())
    throw NumericalError("PolynomialOperators: non-finite entries");
}

double PolynomialOperators::norm() const {
  // |H|_F^2 over the full symmetric tensor: diagonal monomials count once,
  // off-diagonal coefficients are split over two entries.
  const int rr = r();
  double h2 = 0.0;
  for (int j = 0; j < rr; ++j)
    for (int k = j; k < rr; ++k) {
      const auto col = Hm.col(monomial_index(rr, j, k));
      h2 += (j == k ? 1.0 : 0.5) * col.squaredNorm();
    }
  return std::sqrt(A.squaredNorm() + h2 + B.squaredNorm());
}

PolynomialOperators &PolynomialOperators::operator+=(const PolynomialOperators &o) {
  A += o.A;
  Hm += o.Hm;
  B += o.B;
  return *this;
}

PolynomialOperators &PolynomialOperators::operator*=(double s) {
  A *= s;
  Hm *= s;
  B *= s;
  return *this;
}

PolynomialOperators operator+(PolynomialOperators a, const PolynomialOperators &b) {
  return a += b;
}
PolynomialOperators operator-(PolynomialOperators a, const PolynomialOperators &b) {
  a.A -= b.A;
  a.Hm -= b.Hm;
  a.B -= b.B;
  return a;
}
PolynomialOperators operator*(double s, PolynomialOperators a) { return a *= s; }

Vec eval_rhs(const PolynomialOperators &ops, const Vec &z, const Vec &u) {
  Vec f = ops.A * z + ops.Hm * monomials(z);
  if (ops.m() > 0)
    f.noalias() += ops.B * u;
  return f;
}

Mat rhs_jacobian(const PolynomialOperators &ops, const Vec &z) {
  const int r = ops.r();
  Mat J = ops.A;
  int p = 0;
  for (int j = 0; j < r; ++j)
    for (int k = j; k < r; ++k, ++p) {
      if (j == k) {
        J.col(j) += 2.0 * z(j) * ops.Hm.col(p);
      } else {
        J.col(j) += z(k) * ops.Hm.col(p);
        J.col(k) += z(j) * ops.Hm.col(p);
      }
    }
  return J;
}

Vec step_ab2(const PolynomialOperators &ops, const std::optional<Vec> &f_prev,
             const Vec &z, const Vec &u, double dt) {
  const Vec f = eval_rhs(ops, z, u);
  Vec next = f_prev ? Vec(z + dt * (1.5 * f - 0.5 * *f_prev)) : Vec(z + dt * f);
  if (!next.allFinite())
    throw NumericalError("step_ab2: non-finite latent state");
  return next;
}

Vec Ab2Integrator::step(const PolynomialOperators &ops, const Vec &z, const Vec &u,
                        double dt) {
  Vec f = eval_rhs(ops, z, u);
  Vec next = f_prev_ ? Vec(z + dt * (1.5 * f - 0.5 * *f_prev_)) : Vec(z + dt * f);
  if (!next.allFinite())
    throw NumericalError("Ab2Integrator: non-finite latent state");
  f_prev_ = std::move(f);
  return next;
}

ReducedTrajectory simulate(const PolynomialOperators &ops, const Vec &z0,
                           const InputFunction &inputs, int steps, double dt,
                           double t0) {
  require(steps >= 0, "simulate: negative step count");
  require(z0.size() == ops.r(), "simulate: initial condition size");
  ReducedTrajectory tr;
  tr.t.resize(steps + 1);
  tr.z.resize(ops.r(), steps + 1);
  tr.u.resize(ops.m(), steps + 1);
  tr.z.col(0) = z0;
  Ab2Integrator integ;
  for (int k = 0; k <= steps; ++k) {
    const double t = t0 + k * dt;
    tr.t(k) = t;
    const Vec u = ops.m() > 0 ? inputs(t) : Vec();
    if (ops.m() > 0)
      tr.u.col(k) = u;
    if (k == steps)
      break;
    try {
      tr.z.col(k + 1) = integ.step(ops, tr.z.col(k), u, dt);
    } catch (const NumericalError &) {
      throw NumericalError("simulate: non-finite latent state at step " +
                           std::to_string(k + 1));
    }
  }
  return tr;
}

namespace {
template <class T> void put(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}
template <class T> T get(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  return v;
}
} // namespace

void save_operators(const std::filesystem::path &path, const PolynomialOperators &ops) {
  ops.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string());
  const int r = ops.r(), m = ops.m();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(r));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      put<double>(out, ops.A(i, j));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = j; k < r; ++k)
        put<double>(out, ops.h(i, j, k));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < m; ++j)
      put<double>(out, ops.B(i, j));
  if (!out)
    throw IoError("write failed on " + path.string());
}

PolynomialOperators load_operators(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  const int r = static_cast<int>(get<std::uint32_t>(in));
  const int m = static_cast<int>(get<std::uint32_t>(in));
  if (!in || r < 1 || r > 4096 || m > 4096)
    throw IoError(path.string() + ": bad operator header");
  auto ops = PolynomialOperators::zeros(r, m);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      ops.A(i, j) = get<double>(in);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = j; k < r; ++k) {
        const double v = get<double>(in);
        ops.Hm(i, monomial_index(r, j, k)) = (j == k) ? v : 2.0 * v;
      }
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < m; ++j)
      ops.B(i, j) = get<double>(in);
  if (!in)
    throw IoError(path.string() + ": truncated operator record");
  return ops;
}

} // namespace adrom
