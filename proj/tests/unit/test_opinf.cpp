#include "doctest.h"

#include "adrom/opinf.hpp"
#include "support.hpp"

#include <cmath>

using namespace adrom;
using testing::randn;
using testing::rel_err;

namespace {

struct Samples {
  Mat z, dz, u;
};

// Exact derivative samples of a known quadratic model at random states.
Samples sample_model(const PolynomialOperators &ops, int M, std::mt19937_64 &rng) {
  Samples s{randn(rng, ops.r(), M), Mat(ops.r(), M), randn(rng, ops.m(), M)};
  for (int j = 0; j < M; ++j)
    s.dz.col(j) = eval_rhs(ops, s.z.col(j), s.u.col(j));
  return s;
}

double ops_rel_err(const PolynomialOperators &a, const PolynomialOperators &b) {
  return (a - b).norm() / b.norm();
}

// Synthetic quadratic full-order model f(x, w) = L x + Q(x, x) + w b with
// span(V) invariant under L and Q.
struct QuadraticFom {
  Mat V;                         // n x r orthonormal
  Mat L;                         // n x n
  std::vector<Mat> Qk;           // Q(x,x)_i = x^T Qk[i] x
  Vec b;

  Vec operator()(const Vec &x, double w) const {
    Vec f = L * x + w * b;
    for (std::size_t i = 0; i < Qk.size(); ++i)
      f(static_cast<Eigen::Index>(i)) += x.dot(Qk[i] * x);
    return f;
  }
};

QuadraticFom invariant_fom(std::mt19937_64 &rng, int n, int r) {
  // Work in coordinates where span(V) is the first r axes, then rotate.
  QuadraticFom f;
  const Mat R = testing::random_orthonormal(rng, n, n);
  Mat Lc = randn(rng, n, n);
  Lc.bottomLeftCorner(n - r, r).setZero();
  std::vector<Mat> Qc(n, Mat::Zero(n, n));
  for (int i = 0; i < r; ++i)
    Qc[i].topLeftCorner(r, r) = randn(rng, r, r);
  for (int i = r; i < n; ++i) {
    Qc[i] = randn(rng, n, n);
    Qc[i].topLeftCorner(r, r).setZero();
  }
  Vec bc = Vec::Zero(n);
  bc.head(r) = randn(rng, r);
  f.V = R.leftCols(r);
  f.L = R * Lc * R.transpose();
  f.b = R * bc;
  // Q(x,x)_i = sum_k R_ik (R^T x)^T Qc_k (R^T x)
  f.Qk.assign(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      f.Qk[i] += R(i, k) * (R * Qc[k] * R.transpose());
  return f;
}

} // namespace

TEST_CASE("regression data layout") {
  std::mt19937_64 rng(1);
  const Mat z = randn(rng, 3, 7), dz = randn(rng, 3, 7), u = randn(rng, 2, 7);
  const auto d = RegressionData::build(z, dz, u);
  CHECK(d.design.rows() == 7);
  CHECK(d.design.cols() == 3 + 6 + 2);
  CHECK(d.design(4, 0) == z(0, 4));
  CHECK(d.design(4, 3 + monomial_index(3, 1, 2)) == z(1, 4) * z(2, 4));
  CHECK(d.design(4, 10) == u(1, 4));
  CHECK(d.targets.transpose() == dz);
}

TEST_CASE("fit recovers a known quadratic model") {
  std::mt19937_64 rng(2);
  const auto truth = testing::random_ops(rng, 4, 1);
  const auto s = sample_model(truth, 200, rng);
  const FitResult fr = fit(s.z, s.dz, s.u, {0.0});
  CHECK(ops_rel_err(fr.ops, truth) < 1e-8);
}

TEST_CASE("recovery holds for random well-conditioned systems") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int r = 2 + trial % 4;
    const auto truth = testing::random_ops(rng, r, 1);
    const auto s = sample_model(truth, 40 * monomial_count(r), rng);
    const auto d = RegressionData::build(s.z, s.dz, s.u);
    Eigen::JacobiSVD<Mat> svd(d.design);
    const Vec sv = svd.singularValues();
    REQUIRE(sv(0) / sv(sv.size() - 1) < 1e6);
    CHECK(ops_rel_err(fit(d, {0.0}).ops, truth) < 1e-8);
  }
}

TEST_CASE("normal equations hold at the returned solution") {
  std::mt19937_64 rng(4);
  const auto truth = testing::random_ops(rng, 3, 1);
  auto s = sample_model(truth, 60, rng);
  s.dz += 0.1 * randn(rng, 3, 60);
  const auto d = RegressionData::build(s.z, s.dz, s.u);
  for (double lambda : {0.0, 1e-8, 1e-4, 1.0}) {
    const FitResult fr = fit(d, {lambda});
    Mat theta(d.design.cols(), 3);
    theta << fr.ops.A.transpose(), fr.ops.Hm.transpose(), fr.ops.B.transpose();
    const Mat grad = d.design.transpose() * (d.design * theta - d.targets) + lambda * theta;
    CHECK(grad.norm() < 1e-8 * (d.design.transpose() * d.targets).norm());
  }
}

TEST_CASE("residual is non-decreasing in lambda") {
  std::mt19937_64 rng(5);
  const auto truth = testing::random_ops(rng, 3, 1);
  auto s = sample_model(truth, 50, rng);
  s.dz += 0.2 * randn(rng, 3, 50);
  const auto d = RegressionData::build(s.z, s.dz, s.u);
  double prev = -1.0;
  for (double lambda : {0.0, 1e-8, 1e-4, 1.0}) {
    const double res = fit(d, {lambda}).residual;
    CHECK(res >= prev * (1 - 1e-12));
    prev = res;
  }
}

TEST_CASE("degenerate and limiting data") {
  std::mt19937_64 rng(6);
  SUBCASE("constant trajectory with zero derivative") {
    const Vec zs = randn(rng, 3);
    const Mat z = zs.replicate(1, 10);
    const Mat u = Mat::Constant(1, 10, 0.3);
    const FitResult fr = fit(z, Mat::Zero(3, 10), u, {1e-8});
    CHECK(eval_rhs(fr.ops, zs, u.col(0)).norm() < 1e-6);
    CHECK_THROWS_WITH_AS(fit(z, Mat::Zero(3, 10), u, {0.0}), doctest::Contains("lambda > 0"),
                         NumericalError);
  }
  SUBCASE("huge lambda shrinks the operators") {
    const auto truth = testing::random_ops(rng, 3, 1);
    const auto s = sample_model(truth, 50, rng);
    CHECK(fit(s.z, s.dz, s.u, {1e12}).ops.norm() < 1e-6);
  }
  SUBCASE("default lambda scales with the data") {
    const Mat D = randn(rng, 20, 5);
    CHECK(default_lambda(D) == doctest::Approx(1e-8 * (D.transpose() * D).trace() / 5));
    CHECK(default_lambda(3.0 * D) == doctest::Approx(9.0 * default_lambda(D)));
  }
  SUBCASE("linear-only fit leaves H at zero") {
    const auto truth = testing::random_ops(rng, 3, 1);
    const auto s = sample_model(truth, 50, rng);
    FitOptions o;
    o.linear_only = true;
    const FitResult fr = fit(s.z, s.dz, s.u, o);
    CHECK(fr.ops.Hm.isZero(0.0));
    CHECK(fr.ops.A.norm() > 0);
  }
  SUBCASE("negative lambda is rejected") {
    const auto s = sample_model(testing::random_ops(rng, 2, 1), 20, rng);
    CHECK_THROWS_AS(fit(s.z, s.dz, s.u, {-1.0}), PreconditionError);
  }
}

TEST_CASE("galerkin_project on a synthetic quadratic model") {
  std::mt19937_64 rng(7);
  const int n = 12, r = 3;
  const QuadraticFom fom = invariant_fom(rng, n, r);
  const FullRhs f = [&](const Vec &x, double w) { return fom(x, w); };
  const ProjectionPair pair = ProjectionPair::orthogonal(fom.V);
  const auto ops = galerkin_project(f, pair);

  SUBCASE("reconstructs the projected right-hand side") {
    for (int trial = 0; trial < 10; ++trial) {
      const Vec z = randn(rng, r);
      const double w = std::normal_distribution<double>()(rng);
      const Vec direct = fom.V.transpose() * f(fom.V * z, w);
      CHECK((eval_rhs(ops, z, Vec::Constant(1, w)) - direct).norm() < 1e-8 * direct.norm());
    }
  }
  SUBCASE("zero state and input give zero") {
    CHECK(eval_rhs(ops, Vec::Zero(r), Vec::Zero(1)).norm() < 1e-14);
  }
  SUBCASE("agrees with OpInf on data from the invariant subspace") {
    Mat z = randn(rng, r, 80), dz(r, 80), u = randn(rng, 1, 80);
    for (int j = 0; j < 80; ++j)
      dz.col(j) = fom.V.transpose() * f(fom.V * z.col(j), u(0, j));
    const auto inferred = fit(z, dz, u, {0.0}).ops;
    CHECK(ops_rel_err(inferred, ops) < 1e-6);
  }
  SUBCASE("scalar Rayleigh quotient cross-checked by finite differences") {
    const Vec phi = fom.V.col(0);
    const auto one = galerkin_project(f, ProjectionPair::orthogonal(phi));
    const double eps = 1e-4;
    const double fd = phi.dot(f(eps * phi, 0.0) - f(-eps * phi, 0.0)) / (2 * eps);
    CHECK(one.A(0, 0) == doctest::Approx(phi.dot(fom.L * phi)).epsilon(1e-10));
    CHECK(one.A(0, 0) == doctest::Approx(fd).epsilon(1e-8));
  }
  SUBCASE("non-quadratic right-hand sides are rejected") {
    const FullRhs cubic = [&](const Vec &x, double w) {
      Vec out = fom(x, w);
      out += x.cwiseProduct(x).cwiseProduct(x);
      return out;
    };
    CHECK_THROWS_WITH_AS(galerkin_project(cubic, pair), doctest::Contains("not quadratic"),
                         NumericalError);
  }
}

TEST_CASE("adapt_opinf") {
  std::mt19937_64 rng(8);

  SUBCASE("window from a linear system predicts its own tail") {
    // x = V z with dz/dt = A z + B u, sampled densely; derivatives exact.
    const int n = 30, r = 3;
    const Mat V = testing::random_orthonormal(rng, n, r);
    auto truth = PolynomialOperators::zeros(r, 1);
    truth.A = randn(rng, r, r) * 0.3 - Mat::Identity(r, r);
    truth.B = randn(rng, r, 1);
    // Several incommensurate frequencies keep the states from collapsing
    // onto a low-dimensional curve, so quadratic columns stay identifiable.
    auto input = [](double t) {
      return Vec::Constant(1, 3 * std::sin(2 * t) + 2 * std::cos(7.3 * t) + std::sin(17.9 * t));
    };
    const double dt = 1e-3;
    const auto tr = simulate(truth, randn(rng, r), input, 4000, dt);
    MovingWindow w(40);
    for (int j = 0; j < 40; ++j) {
      const int k = 20 * j;
      w.push({tr.t(k), V * tr.z.col(k), V * eval_rhs(truth, tr.z.col(k), tr.u.col(k)),
              tr.u.col(k)});
    }
    OpinfAdaptOptions opt;
    opt.r = r;
    // The default ridge weight biases the fit at the 1e-2 level over this
    // horizon; exact recovery is a lambda = 0 property.
    opt.fit.lambda = 0.0;
    const OpinfUpdate up = adapt_opinf(w, opt);
    CHECK(up.numerical_rank == r);
    CHECK_FALSE(up.degenerate);
    // Roll the refit model from the newest window sample over a held-out
    // stretch of the same length as the window.
    const int k0 = 20 * 39, k1 = 20 * 78;
    const Vec z0 = up.pair.encode(Vec(V * tr.z.col(k0)));
    const auto roll = simulate(up.ops, z0, input, k1 - k0, dt, tr.t(k0));
    const Vec pred = up.pair.decode(Vec(roll.z.col(k1 - k0)));
    const Vec ref = V * simulate(truth, tr.z.col(k0), input, k1 - k0, dt, tr.t(k0)).z.col(k1 - k0);
    CHECK((pred - ref).norm() < 1e-6 * ref.norm());
  }
  SUBCASE("identical samples give a rank-one basis that needs lambda > 0") {
    const Vec x = randn(rng, 20);
    MovingWindow w(5);
    for (int j = 0; j < 5; ++j)
      w.push({0.1 * j, x, Vec::Zero(20), Vec::Constant(1, 0.5)});
    OpinfAdaptOptions opt;
    opt.r = 1;
    opt.fit.lambda = 0.0;
    CHECK_THROWS_AS(adapt_opinf(w, opt), NumericalError);
    opt.fit.lambda = 1e-8;
    const OpinfUpdate up = adapt_opinf(w, opt);
    CHECK(up.numerical_rank == 1);
    const Vec z = up.pair.encode(x);
    CHECK(eval_rhs(up.ops, z, Vec::Constant(1, 0.5)).norm() < 1e-6);
  }
  SUBCASE("rank-deficient windows borrow directions from the previous basis") {
    const int n = 25, r = 4;
    const Mat prev = testing::random_orthonormal(rng, n, r);
    const Mat span2 = randn(rng, n, 2);
    MovingWindow w(6);
    for (int j = 0; j < 6; ++j)
      w.push({0.1 * j, span2 * randn(rng, 2), randn(rng, n), Vec::Constant(1, 0.1 * j)});
    OpinfAdaptOptions opt;
    opt.r = r;
    const OpinfUpdate up = adapt_opinf(w, opt, &prev);
    CHECK(up.degenerate);
    CHECK(up.numerical_rank == 2);
    CHECK(up.pair.orthonormality_defect() < 1e-12);
    // The window span is kept and the rest comes from prev.
    CHECK(max_principal_angle_sin(up.pair.phi(), span2.householderQr().householderQ() *
                                                     Mat::Identity(n, 2)) < 1e-10);
    const Mat rest = prev - up.pair.phi() * (up.pair.phi().transpose() * prev);
    CHECK(rest.norm() < prev.norm());
  }
  SUBCASE("windows need two samples") {
    MovingWindow w(3);
    w.push({0.0, randn(rng, 5), randn(rng, 5), Vec::Zero(1)});
    CHECK_THROWS_AS(adapt_opinf(w, {}), PreconditionError);
  }
}
