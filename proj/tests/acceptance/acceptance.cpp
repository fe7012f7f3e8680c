// Acceptance suite: one PASS/FAIL line per criterion. Case runs use the
// cached base flow and reference trajectory (ADROM_CACHE_DIR) and are
// computed on first use.

#include "adrom/harness.hpp"
#include "adrom/log.hpp"
#include "adrom/metrics.hpp"
#include "adrom/nitrom.hpp"
#include "support.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

using namespace adrom;
using namespace adrom::harness;
using testing::randn;
using testing::random_orthonormal;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared runs

struct Runs {
  Lab &lab;
  fs::path out;
  std::map<std::string, CaseResult> done;
  // Manifold hygiene over every accepted NiTROM iterate seen anywhere.
  double worst_defect = 0.0;
  double worst_idempotency = 0.0;
  long iterates = 0;
  Vec probe;

  OptimizeOptions hygiene_hook() {
    OptimizeOptions o;
    o.on_accept = [this](const NitromParams &p, int) { record(p); };
    return o;
  }

  void record(const NitromParams &p) {
    worst_defect = std::max(worst_defect, p.pair.orthonormality_defect());
    if (probe.size() != p.pair.phi().rows()) {
      std::mt19937_64 rng(99);
      probe = randn(rng, p.pair.phi().rows());
    }
    const Vec px = p.pair.project(probe);
    const Vec ppx = p.pair.project(px);
    worst_idempotency = std::max(worst_idempotency, (ppx - px).norm() / px.norm());
    ++iterates;
  }

  const CaseResult &get(const std::string &key, ExperimentConfig cfg,
                        const std::string &static_key = "") {
    auto it = done.find(key);
    if (it != done.end())
      return it->second;
    cfg.out = out / key;
    cfg.record_every = 1;
    cfg.adapt.optimizer = hygiene_hook();
    const RomModel *init = nullptr;
    if (!static_key.empty())
      init = &done.at(static_key).static_model;
    const auto t0 = std::chrono::steady_clock::now();
    CaseResult r = run_case(lab, cfg, init);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("  [%s] mean e %.4g, mean |dE| %.4g, terminal dE/E %.4g%s (%.0f s)\n",
                key.c_str(), r.summary.mean_field_error, r.summary.mean_energy_error,
                r.summary.terminal_energy_rel, r.summary.failed ? ", FAILED" : "", s);
    std::fflush(stdout);
    return done.emplace(key, std::move(r)).first->second;
  }

  ExperimentConfig config(int id, ModelKind kind, Strategy st) const {
    ExperimentConfig c = ExperimentConfig::for_case(id);
    c.kind = kind;
    c.adapt.strategy = st;
    return c;
  }

  const CaseResult &static_run(int id, ModelKind kind) {
    return get("case" + std::to_string(id) + "_static_" + kind_name(kind),
               config(id, kind, Strategy::static_model));
  }
};

// ---------------------------------------------------------------------------
// 1. Full-order model

Verdict fom_validity(Lab &lab) {
  CavitySolver &fom = lab.solver();
  const double dt = lab.dt();
  const long frames = lab.frames();
  std::ostringstream d;
  bool ok = true;

  double div = 0.0;
  for (long k = 0; k < frames; k += 100)
    div = std::max(div, fom.max_divergence(lab.state(k) + fom.base_flow()));
  ok &= div <= 1e-10;
  d << "max divergence " << fmt("%.2e", div);

  fom.reset_history();
  Vec x = Vec::Zero(static_cast<Eigen::Index>(fom.size()));
  double drift = 0.0;
  for (int k = 0; k < 1000; ++k) {
    x = fom.step_with_input(x, 0.0);
    drift = std::max(drift, metrics::energy(x));
  }
  // The same check on the full field, without removing the base-flow residual.
  const Vec &vbar = fom.base_flow();
  Vec V = vbar;
  Vec f_prev = fom.full_rhs(V, 0.0);
  V += dt * f_prev;
  double full_drift = metrics::energy(V - vbar);
  for (int k = 1; k < 1000; ++k) {
    const Vec f = fom.full_rhs(V, 0.0);
    V += dt * (1.5 * f - 0.5 * f_prev);
    f_prev = f;
    full_drift = std::max(full_drift, metrics::energy(V - vbar));
  }
  ok &= drift < 1e-12 && full_drift < 1e-12;
  d << "; unforced energy " << fmt("%.2e", drift) << " (full field " << fmt("%.2e", full_drift)
    << ")";

  // Energy of the forced run, one sample per 10 steps.
  std::vector<double> t, e;
  double first = 0.0;
  for (long k = 0; k < frames; ++k) {
    if (first == 0.0 || k % 10 == 0) {
      const double ek = metrics::energy(lab.state(k));
      if (first == 0.0 && ek > 0.0)
        first = ek;
      if (k % 10 == 0) {
        t.push_back(k * dt);
        e.push_back(ek);
      }
    }
  }
  bool finite = true;
  double emax = 0.0, early = 0.0, late = 0.0;
  int peaks = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    finite &= std::isfinite(e[i]);
    emax = std::max(emax, e[i]);
    if (t[i] >= 10.0 && t[i] < 15.0)
      early = std::max(early, e[i]);
    if (t[i] >= 15.0)
      late = std::max(late, e[i]);
    if (t[i] >= 10.0 && i > 0 && i + 1 < e.size() && e[i] > e[i - 1] && e[i] > e[i + 1])
      ++peaks;
  }
  const double growth = first > 0 ? emax / first : 0.0;
  ok &= finite && growth >= 1e3;
  // Bounded oscillation: the second half keeps oscillating and does not
  // outgrow its first part.
  ok &= peaks >= 2 && late <= 2.0 * early;
  d << "; forced growth " << fmt("%.2e", growth) << "x, max E on [10,15) " << fmt("%.4g", early)
    << ", on [15,20] " << fmt("%.4g", late) << ", " << peaks << " peaks after t = 10";
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------
// 2. OpInf recovery

Verdict opinf_recovery() {
  std::mt19937_64 rng(2024);
  const auto truth = testing::random_ops(rng, 4, 1);
  const Mat z = randn(rng, 4, 200), u = randn(rng, 1, 200);
  Mat dz(4, 200);
  for (int j = 0; j < 200; ++j)
    dz.col(j) = eval_rhs(truth, z.col(j), u.col(j));
  FitOptions fo;
  fo.lambda = 0.0;
  const FitResult fr = fit(z, dz, u, fo);
  const double err = (fr.ops - truth).norm() / truth.norm();
  return {err < 1e-8, "relative Frobenius error " + fmt("%.2e", err)};
}

// ---------------------------------------------------------------------------
// 3-4. NiTROM gradient gate and manifold hygiene on small instances

InputFunction sine_input() {
  return [](double t) { return Vec::Constant(1, std::sin(3.0 * t)); };
}

PolynomialOperators stable_ops(std::mt19937_64 &rng, int r) {
  auto ops = testing::random_ops(rng, r, 1, 0.1);
  ops.A -= Mat::Identity(r, r);
  return ops;
}

struct Instance {
  NitromParams params;
  NitromProblem prob;
};

Instance small_instance(std::uint64_t seed, int n, int r, int M) {
  std::mt19937_64 rng(seed);
  const Mat phi = random_orthonormal(rng, n, r);
  const Mat psi = qf(phi + 0.3 * randn(rng, n, r), "psi");
  Instance in{{ProjectionPair::oblique(phi, psi), stable_ops(rng, r)}, {}};
  const Mat basis = random_orthonormal(rng, n, r);
  const int stride = 3;
  const auto tr = simulate(stable_ops(rng, r), randn(rng, r), sine_input(), (M - 1) * stride, 0.02);
  Mat X(n, M);
  for (int j = 0; j < M; ++j)
    X.col(j) = basis * tr.z.col(j * stride);
  X += 0.05 * randn(rng, n, M);
  in.prob = NitromProblem::uniform(X, stride, 0.0, 0.02, sine_input());
  return in;
}

TangentUpdate random_tangent(std::mt19937_64 &rng, const NitromParams &p) {
  TangentUpdate t = TangentUpdate::zeros_like(p);
  t.dphi = randn(rng, t.dphi.rows(), t.dphi.cols());
  t.dpsi = randn(rng, t.dpsi.rows(), t.dpsi.cols());
  t.dops = testing::random_ops(rng, p.ops.r(), p.ops.m());
  t = project_tangent(p, t);
  t *= 1.0 / t.norm();
  return t;
}

Verdict gradient_gate(Runs &runs) {
  const Instance in = small_instance(31, 20, 3, 10);
  std::mt19937_64 rng(310);
  const GradientValue g = gradient(in.params, in.prob);
  double worst = 0.0;
  const double eps = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const TangentUpdate d = random_tangent(rng, in.params);
    const double fd = (cost(retract(in.params, d, eps), in.prob).J -
                       cost(retract(in.params, d, -eps), in.prob).J) /
                      (2 * eps);
    worst = std::max(worst, std::abs(fd - g.grad.dot(d)) / std::max(std::abs(fd), 1e-300));
  }
  // Armijo descent on several instances.
  bool monotone = true;
  int runs_checked = 0;
  for (std::uint64_t seed : {41u, 42u, 43u, 44u, 45u}) {
    const Instance s = small_instance(seed, 20, 3, 10);
    const OptimizeResult o = optimize(s.params, s.prob, 40, runs.hygiene_hook());
    for (std::size_t i = 1; i < o.history.size(); ++i)
      monotone &= o.history[i].J <= o.history[i - 1].J;
    ++runs_checked;
  }
  return {worst < 1e-5 && monotone && !g.cost.blown_up,
          "worst FD relative error " + fmt("%.2e", worst) + " over 20 directions; " +
              std::to_string(runs_checked) + " descent histories " +
              (monotone ? "monotone" : "NOT monotone")};
}

Verdict manifold_hygiene(const Runs &runs) {
  const bool ok = runs.iterates > 0 && runs.worst_defect <= 1e-12 &&
                  runs.worst_idempotency <= 1e-11;
  return {ok, std::to_string(runs.iterates) + " accepted iterates; worst orthonormality defect " +
                  fmt("%.2e", runs.worst_defect) + ", worst idempotency defect " +
                  fmt("%.2e", runs.worst_idempotency)};
}

// ---------------------------------------------------------------------------
// 5-7. Case runs

Verdict case1_frequent(Runs &runs) {
  const CaseResult &so = runs.static_run(1, ModelKind::opinf);
  const CaseResult &sn = runs.static_run(1, ModelKind::nitrom);
  const CaseResult &ao = runs.get("case1_adaptive-opinf_Z10_M100",
                                  runs.config(1, ModelKind::opinf, Strategy::adaptive_opinf),
                                  "case1_static_opinf");
  const CaseResult &an = runs.get("case1_adaptive-nitrom_Z10_M100",
                                  runs.config(1, ModelKind::nitrom, Strategy::adaptive_nitrom),
                                  "case1_static_nitrom");
  const double ro = ao.summary.mean_field_error / so.summary.mean_field_error;
  const double rn = an.summary.mean_field_error / sn.summary.mean_field_error;
  const double te = an.summary.terminal_energy_rel;
  const bool ok = !ao.summary.failed && !an.summary.failed && ro < 0.5 && rn < 0.5 && te < 0.10;
  return {ok, "error ratio adaptive/static OpInf " + fmt("%.3f", ro) + ", NiTROM " +
                  fmt("%.3f", rn) + " (< 0.5); Adaptive NiTROM terminal energy error " +
                  fmt("%.1f%%", 100 * te) + " (< 10%)"};
}

Verdict case1_infrequent(Runs &runs) {
  runs.static_run(1, ModelKind::opinf);
  runs.static_run(1, ModelKind::nitrom);
  auto cfg = [&](ModelKind k, Strategy s, int K) {
    ExperimentConfig c = runs.config(1, k, s);
    c.adapt.Z = 50;
    c.adapt.M = 20;
    c.adapt.K = K;
    return c;
  };
  const CaseResult &ao = runs.get("case1_adaptive-opinf_Z50_M20",
                                  cfg(ModelKind::opinf, Strategy::adaptive_opinf, 10),
                                  "case1_static_opinf");
  const CaseResult &hy = runs.get("case1_hybrid_Z50_M20_K10",
                                  cfg(ModelKind::nitrom, Strategy::hybrid, 10),
                                  "case1_static_nitrom");
  const CaseResult &an = runs.get("case1_adaptive-nitrom_Z50_M20_K20",
                                  cfg(ModelKind::nitrom, Strategy::adaptive_nitrom, 20),
                                  "case1_static_nitrom");
  const Flags &f = ao.summary.flags;
  const bool a = !ao.summary.failed && f.bounded_energy && f.decay;
  const bool b = !hy.summary.failed &&
                 hy.summary.mean_energy_error < an.summary.mean_energy_error;
  return {a && b, std::string("Adaptive OpInf bounded ") + (f.bounded_energy ? "yes" : "no") +
                      ", decay " + (f.decay ? "yes" : "no") + "; mean |dE| hybrid K=10 " +
                      fmt("%.4g", hy.summary.mean_energy_error) + " vs Adaptive NiTROM K=20 " +
                      fmt("%.4g", an.summary.mean_energy_error)};
}

Verdict cases23(Runs &runs, TimingReport *timing) {
  bool ok = true;
  std::ostringstream d;
  for (int id : {2, 3}) {
    int exits = 0;
    for (ModelKind k : {ModelKind::galerkin, ModelKind::opinf, ModelKind::nitrom})
      exits += runs.static_run(id, k).summary.flags.exits_envelope;
    const std::string pre = "case" + std::to_string(id);
    const CaseResult &hy = runs.get(pre + "_hybrid",
                                    runs.config(id, ModelKind::nitrom, Strategy::hybrid),
                                    pre + "_static_nitrom");
    const CaseResult &an = runs.get(pre + "_adaptive-nitrom",
                                    runs.config(id, ModelKind::nitrom, Strategy::adaptive_nitrom),
                                    pre + "_static_nitrom");
    const bool tracks = !hy.summary.failed && hy.summary.flags.tracks_envelope;
    const bool no_improvement =
        !improves_on(an.summary, runs.static_run(id, ModelKind::nitrom).summary);
    ok &= exits == 3 && tracks && no_improvement;
    d << "case " << id << ": " << exits << "/3 static models exit, hybrid "
      << (tracks ? "tracks" : "does NOT track") << " the envelope, Adaptive NiTROM "
      << (no_improvement ? "shows no improvement" : "improves") << "; ";
    if (id == 2 && timing)
      *timing = timing_report(hy.online);
  }
  std::string s = d.str();
  s.resize(s.size() - 2);
  return {ok, s};
}

// ---------------------------------------------------------------------------
// 8. Timing

Verdict timing_order(const TimingReport &t) {
  std::ostringstream d;
  const double v[] = {t.rom_step, t.fom_step, t.svd, t.opinf_refit, t.nitrom_iter};
  const char *name[] = {"ROM", "FOM", "SVD", "OpInf", "NiTROM"};
  for (int i = 0; i < 5; ++i) {
    if (i > 0)
      d << (v[i - 1] < v[i] ? " < " : " >= ");
    d << name[i] << " " << fmt("%.3g", v[i]);
  }
  d << " ms (hybrid, M = 10)";
  return {t.events > 0 && t.ordered(), d.str()};
}

// ---------------------------------------------------------------------------
// 9. Degenerate configurations

Verdict degenerate(Runs &runs) {
  Lab &lab = runs.lab;
  const CaseResult &so = runs.static_run(1, ModelKind::opinf);
  const ExperimentConfig base = ExperimentConfig::for_case(1);
  const long k1 = lab.step_of(base.cs.t1);
  const int N = 400;
  const double t1 = base.cs.t1, t2 = t1 + N * lab.dt();
  const MovingWindow d0 = lab.tail_window(k1, base.adapt.M, base.adapt.Z);
  const Vec z0 = model_pair(so.static_model).encode(d0.newest().x);
  const ForcingConfig f = lab.solver().forcing();
  const ReducedTrajectory plain = simulate(model_ops(so.static_model), z0,
                                           [f](double t) { return Vec::Constant(1, f.signal(t)); },
                                           N, lab.dt(), t1);
  bool ok = true;
  int checked = 0;
  for (Strategy st : {Strategy::static_model, Strategy::adaptive_opinf,
                      Strategy::adaptive_nitrom, Strategy::hybrid}) {
    AdaptationConfig cfg = base.adapt;
    cfg.strategy = st;
    if (st != Strategy::static_model)
      cfg.Z = N + 1;
    const OnlineResult r = run_online(lab.solver(), so.static_model, cfg, t1, t2, d0);
    ok &= !r.failed && r.fom_queries == 0 && r.latent == plain.z;
    ++checked;
  }
  return {ok, std::to_string(checked) + " configurations over " + std::to_string(N) +
                  " steps " + (ok ? "bitwise identical" : "DIFFER") + " to the plain rollout"};
}

// ---------------------------------------------------------------------------
// 10. Linear versus quadratic

Verdict linear_vs_quadratic(Runs &runs) {
  ExperimentConfig q = ExperimentConfig::for_case(1);
  q.kind = ModelKind::nitrom;
  q.adapt.optimizer = runs.hygiene_hook();
  TrainReport rq, rl;
  train_static(runs.lab, q, &rq);
  ExperimentConfig l = q;
  l.linear_only = true;
  train_static(runs.lab, l, &rl);
  const double ratio = rl.train_error / rq.train_error;
  return {std::isfinite(rq.train_error) && ratio >= 3.0,
          "training-window error linear " + fmt("%.4g", rl.train_error) + ", quadratic " +
              fmt("%.4g", rq.train_error) + ", ratio " + fmt("%.2f", ratio) + " (>= 3)"};
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"acceptance criteria"};
  std::string cache = default_cache_dir().string();
  std::string out = "acceptance-out";
  std::vector<int> only;
  app.add_option("--cache", cache, "cache directory");
  app.add_option("--out", out, "directory for run outputs");
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  set_log_sink([](LogLevel level, const std::string &msg) {
    if (level == LogLevel::warning)
      std::fprintf(stderr, "warning: %s\n", msg.c_str());
  });
  Lab lab(cache);
  Runs runs{lab, out, {}};
  const std::set<int> pick(only.begin(), only.end());
  auto wanted = [&](int c) { return pick.empty() || pick.count(c); };

  std::map<int, std::pair<std::string, Verdict>> verdicts;
  auto report = [&](int c, const char *name, const std::function<Verdict()> &fn) {
    if (!wanted(c))
      return;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception &e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::printf("  (criterion %d evaluated)\n", c);
    std::fflush(stdout);
    verdicts[c] = {name, v};
  };

  TimingReport timing;
  report(1, "FOM validity", [&] { return fom_validity(lab); });
  report(2, "OpInf recovery", [] { return opinf_recovery(); });
  report(3, "NiTROM gradient gate", [&] { return gradient_gate(runs); });
  report(5, "case 1 frequent adaptation", [&] { return case1_frequent(runs); });
  report(6, "case 1 infrequent adaptation", [&] { return case1_infrequent(runs); });
  report(7, "cases 2-3", [&] { return cases23(runs, &timing); });
  report(8, "timing order", [&] {
    if (timing.events == 0)
      cases23(runs, &timing);
    return timing_order(timing);
  });
  report(9, "degenerate configurations", [&] { return degenerate(runs); });
  report(10, "linear vs quadratic", [&] { return linear_vs_quadratic(runs); });
  // Hygiene covers every NiTROM iterate accepted above.
  report(4, "manifold hygiene", [&] {
    if (runs.iterates == 0)
      gradient_gate(runs);
    return manifold_hygiene(runs);
  });

  int failed = 0;
  std::printf("\n");
  for (const auto &[c, nv] : verdicts) {
    failed += !nv.second.pass;
    std::printf("criterion %d (%s): %s  %s\n", c, nv.first.c_str(),
                nv.second.pass ? "PASS" : "FAIL", nv.second.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(verdicts.size()) - failed,
              verdicts.size());
  return failed ? 1 : 0;
}
