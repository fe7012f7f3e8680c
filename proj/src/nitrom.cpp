#include "adrom/nitrom.hpp"

#include "adrom/csv.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace adrom {
namespace {

constexpr Eigen::Index kBlock = 256;
constexpr double kBlowupPenalty = 1e12;

struct Rollout {
  Mat z; ///< r x (N+1)
  Mat u; ///< m x (N+1)
  bool blown_up = false;
};

Rollout rollout(const NitromParams &p, const NitromProblem &prob) {
  const int N = prob.steps();
  const int r = p.ops.r(), m = p.ops.m();
  Rollout ro;
  ro.z.resize(r, N + 1);
  ro.u.resize(m, N + 1);
  ro.z.col(0) = p.pair.encode(Vec(prob.X.col(0)));
  double xmax = 0.0;
  for (Eigen::Index j = 0; j < prob.X.cols(); ++j)
    xmax = std::max(xmax, prob.X.col(j).norm());
  const double limit = 1e8 * (1.0 + xmax + ro.z.col(0).norm());
  Vec f_prev;
  for (int k = 0; k <= N; ++k) {
    if (m > 0)
      ro.u.col(k) = prob.input(prob.t0 + k * prob.dt);
    if (k == N)
      break;
    const Vec zk = ro.z.col(k);
    const Vec f = eval_rhs(p.ops, zk, ro.u.col(k));
    Vec next = k == 0 ? Vec(zk + prob.dt * f) : Vec(zk + prob.dt * (1.5 * f - 0.5 * f_prev));
    if (!next.allFinite() || next.norm() > limit) {
      ro.blown_up = true;
      return ro;
    }
    ro.z.col(k + 1) = next;
    f_prev = f;
  }
  return ro;
}

double window_energy(const NitromProblem &prob) {
  return prob.X.squaredNorm() / static_cast<double>(prob.samples());
}

double blowup_penalty(const NitromProblem &prob) {
  const double e = window_energy(prob);
  return kBlowupPenalty * (e > 0.0 ? e : 1.0);
}

Mat sampled(const Rollout &ro, const NitromProblem &prob) {
  Mat zs(ro.z.rows(), prob.samples());
  for (int j = 0; j < prob.samples(); ++j)
    zs.col(j) = ro.z.col(prob.sample_step[static_cast<std::size_t>(j)]);
  return zs;
}

} // namespace

NitromParams NitromParams::from_basis(const Mat &phi, PolynomialOperators ops) {
  require(ops.r() == phi.cols(), "NitromParams: basis rank differs from operator size");
  return {ProjectionPair::orthogonal(phi), std::move(ops)};
}

NitromParams NitromParams::from_opinf(const OpinfUpdate &u) { return {u.pair, u.ops}; }

NitromProblem NitromProblem::uniform(Mat X, int stride, double t0, double dt,
                                     InputFunction input) {
  require(stride >= 1, "NitromProblem: stride must be positive");
  NitromProblem p;
  p.sample_step.resize(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    p.sample_step[static_cast<std::size_t>(j)] = static_cast<int>(j) * stride;
  p.X = std::move(X);
  p.t0 = t0;
  p.dt = dt;
  p.input = std::move(input);
  p.validate();
  return p;
}

NitromProblem NitromProblem::from_window(const MovingWindow &w, double dt,
                                         InputFunction input) {
  require(!w.empty(), "NitromProblem: empty window");
  int stride = 1;
  if (w.size() >= 2) {
    const double h = w.spacing();
    stride = static_cast<int>(std::lround(h / dt));
    require(stride >= 1 && std::abs(stride * dt - h) <= 1e-9 * h,
            "NitromProblem: window spacing is not a multiple of dt");
  }
  return uniform(w.states(), stride, w.oldest().t, dt, std::move(input));
}

void NitromProblem::validate() const {
  require(X.cols() >= 1, "NitromProblem: no samples");
  require(sample_step.size() == static_cast<std::size_t>(X.cols()),
          "NitromProblem: one step index per sample required");
  require(sample_step.front() == 0, "NitromProblem: first sample must be at step 0");
  require(std::is_sorted(sample_step.begin(), sample_step.end()),
          "NitromProblem: sample steps must be nondecreasing");
  require(dt > 0.0 || steps() == 0, "NitromProblem: dt must be positive");
  require(X.allFinite(), "NitromProblem: non-finite samples");
}

TangentUpdate TangentUpdate::zeros_like(const NitromParams &p) {
  const auto &phi = p.pair.phi();
  return {Mat::Zero(phi.rows(), phi.cols()), Mat::Zero(phi.rows(), phi.cols()),
          PolynomialOperators::zeros(p.ops.r(), p.ops.m())};
}

double TangentUpdate::dot(const TangentUpdate &o) const {
  return (dphi.array() * o.dphi.array()).sum() + (dpsi.array() * o.dpsi.array()).sum() +
         (dops.A.array() * o.dops.A.array()).sum() +
         (dops.Hm.array() * o.dops.Hm.array()).sum() +
         (dops.B.array() * o.dops.B.array()).sum();
}

TangentUpdate &TangentUpdate::operator*=(double s) {
  dphi *= s;
  dpsi *= s;
  dops *= s;
  return *this;
}

TangentUpdate &TangentUpdate::operator+=(const TangentUpdate &o) {
  dphi += o.dphi;
  dpsi += o.dpsi;
  dops += o.dops;
  return *this;
}

double TangentUpdate::tangency_residual(const NitromParams &p) const {
  const Mat a = p.pair.phi().transpose() * dphi;
  const Mat b = p.pair.psi().transpose() * dpsi;
  const Mat skew = b + b.transpose();
  return std::max(a.cwiseAbs().maxCoeff(), skew.cwiseAbs().maxCoeff());
}

TangentUpdate project_tangent(const NitromParams &p, TangentUpdate t) {
  const Mat &phi = p.pair.phi();
  const Mat &psi = p.pair.psi();
  t.dphi -= phi * (phi.transpose() * t.dphi);
  const Mat s = psi.transpose() * t.dpsi;
  t.dpsi -= psi * (0.5 * (s + s.transpose()));
  return t;
}

CostValue cost(const NitromParams &p, const NitromProblem &prob) {
  require(p.pair.rank() == p.ops.r(), "cost: basis rank differs from operator size");
  require(p.pair.dim() == prob.X.rows(), "cost: basis length differs from state length");
  const Rollout ro = rollout(p, prob);
  if (ro.blown_up)
    return {blowup_penalty(prob), true};
  const Mat zs = sampled(ro, prob);
  const Mat &D = p.pair.decoder();
  double J = 0.0;
  for (Eigen::Index c0 = 0; c0 < zs.cols(); c0 += kBlock) {
    const Eigen::Index b = std::min(kBlock, zs.cols() - c0);
    J += (prob.X.middleCols(c0, b) - D * zs.middleCols(c0, b)).squaredNorm();
  }
  return {J / static_cast<double>(prob.samples()), false};
}

GradientValue gradient(const NitromParams &p, const NitromProblem &prob) {
  require(p.pair.rank() == p.ops.r(), "gradient: basis rank differs from operator size");
  require(p.pair.dim() == prob.X.rows(), "gradient: basis length differs from state length");
  GradientValue out;
  out.grad = TangentUpdate::zeros_like(p);
  const Rollout ro = rollout(p, prob);
  if (ro.blown_up) {
    out.cost = {blowup_penalty(prob), true};
    return out;
  }
  const int M = prob.samples();
  const int N = prob.steps();
  const int r = p.ops.r();
  const double inv_m = 1.0 / M;
  const Mat zs = sampled(ro, prob);
  const Mat &phi = p.pair.phi();
  const Mat &psi = p.pair.psi();
  const Mat &D = p.pair.decoder();

  // Residual pass: J, dJ/dD and the direct sensitivities D^T e_j.
  double J = 0.0;
  Mat gD = Mat::Zero(D.rows(), r);
  Mat dte(r, M);
  for (Eigen::Index c0 = 0; c0 < M; c0 += kBlock) {
    const Eigen::Index b = std::min<Eigen::Index>(kBlock, M - c0);
    const Mat e = prob.X.middleCols(c0, b) - D * zs.middleCols(c0, b);
    J += e.squaredNorm();
    gD.noalias() += e * zs.middleCols(c0, b).transpose();
    dte.middleCols(c0, b).noalias() = D.transpose() * e;
  }
  J *= inv_m;
  gD *= -2.0 * inv_m;
  Mat src = Mat::Zero(r, N + 1);
  for (int j = 0; j < M; ++j)
    src.col(prob.sample_step[static_cast<std::size_t>(j)]) -= 2.0 * inv_m * dte.col(j);

  // Reverse sweep through z_{k+1} = z_k + dt (c_k f_k - 0.5 f_{k-1}), with
  // c_0 = 1 and no f_{-1} term (Euler start), c_k = 1.5 otherwise.
  PolynomialOperators &g = out.grad.dops;
  Vec lam1 = Vec::Zero(r); // lambda_{k+1}
  Vec lam2 = Vec::Zero(r); // lambda_{k+2}
  Vec lam(r);
  for (int k = N; k >= 0; --k) {
    lam = src.col(k);
    if (k < N) {
      Vec gk = (k == 0 ? 1.0 : 1.5) * lam1;
      if (k + 2 <= N)
        gk -= 0.5 * lam2;
      gk *= prob.dt;
      const Vec zk = ro.z.col(k);
      lam += lam1;
      lam.noalias() += rhs_jacobian(p.ops, zk).transpose() * gk;
      g.A.noalias() += gk * zk.transpose();
      g.Hm.noalias() += gk * monomials(zk).transpose();
      if (p.ops.m() > 0)
        g.B.noalias() += gk * ro.u.col(k).transpose();
    }
    lam2 = lam1;
    lam1 = lam;
  }
  // lam1 now holds dJ/dz_0.

  // D = Phi S^{-1}, S = Psi^T Phi.
  const Mat S = psi.transpose() * phi;
  const Eigen::PartialPivLU<Mat> lu(S);
  const Mat W = lu.solve(gD.transpose() * D);                 // S^{-1} G_D^T D
  const Mat sinv_t = lu.inverse().transpose();
  const Mat gDSinvT = gD * sinv_t; // G_D S^{-T}
  TangentUpdate amb;
  amb.dphi = gDSinvT - psi * W.transpose();
  amb.dpsi = -phi * W + prob.X.col(0) * lam1.transpose();
  amb.dops = std::move(g);
  out.grad = project_tangent(p, std::move(amb));
  out.cost = {J, false};
  return out;
}

Mat qf(const Mat &m, const char *what) {
  Eigen::HouseholderQR<Mat> qr(m);
  const auto &R = qr.matrixQR();
  const Eigen::Index k = m.cols();
  double rmax = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    rmax = std::max(rmax, std::abs(R(i, i)));
  for (Eigen::Index i = 0; i < k; ++i)
    if (!(std::abs(R(i, i)) > 1e-13 * rmax) || !std::isfinite(R(i, i))) {
      std::ostringstream os;
      os << "QR breakdown in retraction of " << what << " (column " << i << ")";
      throw NumericalError(os.str());
    }
  Mat q = qr.householderQ() * Mat::Identity(m.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i)
    if (R(i, i) < 0)
      q.col(i) = -q.col(i);
  return q;
}

NitromParams retract(const NitromParams &p, const TangentUpdate &dir, double step) {
  if (step == 0.0)
    return p;
  Mat phi = qf(p.pair.phi() + step * dir.dphi, "Phi");
  Mat psi = qf(p.pair.psi() + step * dir.dpsi, "Psi");
  NitromParams out{ProjectionPair::oblique(std::move(phi), std::move(psi)),
                   p.ops + step * dir.dops};
  if (!out.ops.all_finite())
    throw NumericalError("retract: non-finite operators");
  return out;
}

OptimizeResult optimize(const NitromParams &p0, const NitromProblem &prob, int K,
                        const OptimizeOptions &opt) {
  require(K >= 1, "optimize: iteration budget K must be at least 1");
  prob.validate();
  OptimizeResult res;
  res.params = p0;
  auto grad_at = [&](const NitromParams &p) {
    GradientValue g = gradient(p, prob);
    ++res.gradient_evals;
    if (opt.freeze_quadratic)
      g.grad.dops.Hm.setZero();
    return g;
  };
  GradientValue gv = grad_at(res.params);
  res.history.push_back({0, gv.cost.J, 0.0, 0});
  if (gv.cost.blown_up) {
    res.blown_up = true;
    res.stalled = true;
    return res;
  }
  double prev_step = 0.0;
  for (int it = 1; it <= K; ++it) {
    const double gnorm2 = gv.grad.dot(gv.grad);
    if (!(gnorm2 > 0.0))
      break;
    TangentUpdate dir = gv.grad;
    dir *= -1.0;
    double step = it == 1 ? 1.0 / (1.0 + std::sqrt(gnorm2)) : 2.0 * prev_step;
    int backtracks = 0;
    bool accepted = false;
    NitromParams trial;
    double Jt = 0.0;
    while (true) {
      try {
        trial = retract(res.params, dir, step);
        const CostValue cv = cost(trial, prob);
        ++res.cost_evals;
        Jt = cv.J;
        accepted = !cv.blown_up && Jt <= gv.cost.J - opt.armijo_c * step * gnorm2;
      } catch (const NumericalError &) {
        accepted = false;
      }
      if (accepted)
        break;
      if (++backtracks >= opt.max_backtracks)
        break;
      step *= opt.shrink;
    }
    if (!accepted) {
      res.stalled = true;
      break;
    }
    res.params = std::move(trial);
    prev_step = step;
    if (opt.on_accept)
      opt.on_accept(res.params, it);
    if (it < K) {
      gv = grad_at(res.params);
    } else {
      gv.cost.J = Jt;
    }
    res.history.push_back({it, Jt, step, backtracks});
  }
  return res;
}

OptimizeResult adapt_nitrom(const NitromParams &prev, const NitromProblem &prob, int K,
                            const OptimizeOptions &opt) {
  require(K >= 1, "adapt_nitrom: K must be at least 1");
  return optimize(prev, prob, K, opt);
}

HybridResult hybrid_adapt(const MovingWindow &window, const NitromProblem &prob,
                          const OpinfAdaptOptions &opinf_opt, int K_refine,
                          const Mat *previous_basis, const OptimizeOptions &opt) {
  require(K_refine >= 0, "hybrid_adapt: K_refine must be nonnegative");
  HybridResult h;
  h.opinf = adapt_opinf(window, opinf_opt, previous_basis);
  h.params = NitromParams::from_opinf(h.opinf);
  if (K_refine > 0) {
    h.opt = optimize(h.params, prob, K_refine, opt);
    h.params = h.opt.params;
  }
  return h;
}

void append_history_csv(const std::filesystem::path &path, int event,
                        const std::vector<IterationRecord> &history) {
  const bool fresh = !std::filesystem::exists(path);
  CsvWriter csv(path, /*append=*/true);
  if (fresh)
    csv.header({"event_index", "iter", "J", "step", "backtracks"});
  for (const auto &h : history) {
    csv.field(event);
    csv.field(h.iter);
    csv.field(h.J);
    csv.field(h.step);
    csv.field(h.backtracks);
    csv.end_row();
  }
}

} // namespace adrom
