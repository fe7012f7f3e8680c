#include "adrom/harness.hpp"

#include "adrom/csv.hpp"
#include "adrom/log.hpp"
#include "adrom/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace adrom::harness {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

InputFunction forcing_input(const CavitySolver &fom) {
  const ForcingConfig f = fom.forcing();
  return [f](double t) { return Vec::Constant(1, f.signal(t)); };
}

std::string tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double mean_over(const std::vector<double> &t, const std::vector<double> &v, double lo,
                 double hi) {
  double s = 0.0;
  long c = 0;
  for (std::size_t i = 0; i < t.size() && i < v.size(); ++i)
    if (t[i] > lo + 1e-12 && t[i] <= hi + 1e-12) {
      s += v[i];
      ++c;
    }
  return c ? s / c : std::numeric_limits<double>::quiet_NaN();
}

// Smallest ridge weight on a fixed ladder whose latent rollout over the
// training samples stays within 10x the largest training energy. The
// scaled default comes first.
FitResult fit_bounded(const Mat &z, const Vec &z0, const Mat &dz, const Mat &u, FitOptions fo,
                      double dt, const InputFunction &input) {
  double cap = 0.0;
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    cap = std::max(cap, z.col(c).squaredNorm());
  cap *= 10.0;
  const std::vector<std::optional<double>> ladder = {std::nullopt, 1e-6, 1e-4, 1e-3,
                                                     1e-2,         1e-1, 1.0};
  FitResult last;
  for (const auto &lam : ladder) {
    fo.lambda = lam;
    last = fit(z, dz, u, fo);
    bool bounded = true;
    try {
      const ReducedTrajectory tr =
          simulate(last.ops, z0, input, static_cast<int>(z.cols()), dt, 0.0);
      for (Eigen::Index c = 0; c < tr.z.cols() && bounded; ++c)
        bounded = tr.z.col(c).squaredNorm() <= cap;
    } catch (const NumericalError &) {
      bounded = false;
    }
    if (bounded)
      return last;
    log_info("offline fit: lambda " + tag(last.lambda) + " leaves the training rollout unbounded");
  }
  log_warning("offline fit: no ridge weight on the ladder gives a bounded training rollout");
  return last;
}

} // namespace

CaseSpec CaseSpec::get(int id) {
  CaseSpec c;
  c.id = id;
  switch (id) {
  case 1:
    c.t1 = 12.5;
    c.t2 = 20.0;
    c.M = 100;
    c.offline_K = 60;
    break;
  case 2:
    c.t1 = 7.5;
    c.t2 = 10.0;
    c.M = 10;
    c.offline_K = 50;
    break;
  case 3:
    c.t1 = 3.75;
    c.t2 = 6.25;
    c.M = 10;
    c.offline_K = 10;
    break;
  default:
    throw PreconditionError("unknown case " + std::to_string(id) + " (expected 1, 2 or 3)");
  }
  c.Z = 10;
  c.K = 10;
  return c;
}

const char *kind_name(ModelKind k) {
  switch (k) {
  case ModelKind::galerkin:
    return "galerkin";
  case ModelKind::opinf:
    return "opinf";
  case ModelKind::nitrom:
    return "nitrom";
  }
  return "?";
}

ModelKind parse_kind(const std::string &s) {
  for (ModelKind k : {ModelKind::galerkin, ModelKind::opinf, ModelKind::nitrom})
    if (s == kind_name(k))
      return k;
  throw PreconditionError("unknown model kind '" + s + "'");
}

ExperimentConfig ExperimentConfig::for_case(int id) {
  ExperimentConfig c;
  c.cs = CaseSpec::get(id);
  c.adapt.M = c.cs.M;
  c.adapt.Z = c.cs.Z;
  c.adapt.K = c.cs.K;
  return c;
}

void ExperimentConfig::validate() const {
  require(r >= 1, "config: r must be at least 1");
  require(offline_stride >= 1 && nitrom_train_stride >= 1 && record_every >= 1,
          "config: strides must be positive");
  require(cs.t0 < cs.t1 && cs.t1 < cs.t2, "config: need t0 < t1 < t2");
  if (offline_K)
    require(*offline_K >= 0, "config: offline_K must be nonnegative");
  adapt.validate();
}

json ExperimentConfig::to_json() const {
  json j;
  j["case"] = cs.id;
  j["model"] = kind_name(kind);
  j["strategy"] = strategy_name(adapt.strategy);
  j["M"] = adapt.M;
  j["Z"] = adapt.Z;
  j["K"] = adapt.K;
  j["r"] = r;
  j["lambda"] = adapt.lambda ? json(*adapt.lambda) : json(nullptr);
  j["basis"] = adapt.basis == BasisUpdate::isvd ? "isvd" : "windowed-svd";
  j["seed"] = seed;
  j["out"] = out.string();
  j["linear_only"] = linear_only;
  j["offline_stride"] = offline_stride;
  j["nitrom_train_stride"] = nitrom_train_stride;
  j["offline_K"] = offline_K.value_or(cs.offline_K);
  j["record_every"] = record_every;
  j["t1"] = cs.t1;
  j["t2"] = cs.t2;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json &j, ExperimentConfig c) {
  if (j.contains("case") && j["case"].get<int>() != c.cs.id) {
    const ExperimentConfig d = for_case(j["case"].get<int>());
    c.cs = d.cs;
    c.adapt.M = d.adapt.M;
    c.adapt.Z = d.adapt.Z;
    c.adapt.K = d.adapt.K;
  }
  if (j.contains("model"))
    c.kind = parse_kind(j["model"].get<std::string>());
  if (j.contains("strategy"))
    c.adapt.strategy = parse_strategy(j["strategy"].get<std::string>());
  if (j.contains("M"))
    c.adapt.M = j["M"].get<int>();
  if (j.contains("Z"))
    c.adapt.Z = j["Z"].get<int>();
  if (j.contains("K"))
    c.adapt.K = j["K"].get<int>();
  if (j.contains("r"))
    c.r = j["r"].get<int>();
  if (j.contains("lambda")) {
    if (j["lambda"].is_null())
      c.adapt.lambda.reset();
    else
      c.adapt.lambda = j["lambda"].get<double>();
  }
  if (j.contains("basis")) {
    const auto b = j["basis"].get<std::string>();
    require(b == "isvd" || b == "windowed-svd", "config: basis must be windowed-svd or isvd");
    c.adapt.basis = b == "isvd" ? BasisUpdate::isvd : BasisUpdate::windowed_svd;
  }
  if (j.contains("seed"))
    c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("out"))
    c.out = j["out"].get<std::string>();
  if (j.contains("linear_only"))
    c.linear_only = j["linear_only"].get<bool>();
  if (j.contains("offline_stride"))
    c.offline_stride = j["offline_stride"].get<int>();
  if (j.contains("nitrom_train_stride"))
    c.nitrom_train_stride = j["nitrom_train_stride"].get<int>();
  if (j.contains("offline_K"))
    c.offline_K = j["offline_K"].get<int>();
  if (j.contains("record_every"))
    c.record_every = j["record_every"].get<int>();
  return c;
}

fs::path default_cache_dir() {
  if (const char *e = std::getenv("ADROM_CACHE_DIR"); e && *e)
    return e;
  return "adrom-cache";
}

Lab::Lab(fs::path cache_dir, double horizon) : dir_(std::move(cache_dir)) {
  fs::create_directories(dir_);
  fom_ = std::make_unique<CavitySolver>();
  ensure_base_flow();
  if (horizon > 0)
    ensure_trajectory(horizon);
}

void Lab::ensure_base_flow() {
  const fs::path p =
      dir_ / ("base_re" + tag(fom_->params().re) + ".adrm");
  if (fs::exists(p)) {
    fom_->set_base_flow(read_frames(p).col(0));
    return;
  }
  log_info("computing the steady base flow (this takes several minutes)");
  SteadyStateOptions opt;
  opt.check_every = 1000;
  const auto t0 = Clock::now();
  const SteadyStateResult s = fom_->steady_state(opt);
  log_info("steady state after " + std::to_string(s.steps) + " steps, residual " +
           tag(s.residual) + ", " + tag(seconds_since(t0)) + " s");
  Mat col = s.field;
  write_frames(p, col, fom_->dt());
  fom_->set_base_flow(s.field);
}

void Lab::ensure_trajectory(double horizon) {
  const long steps = std::lround(horizon / dt());
  const fs::path p = dir_ / ("forced_re" + tag(fom_->params().re) + "_T" + tag(horizon) + ".adrm");
  if (fs::exists(p)) {
    traj_ = std::make_unique<SnapshotReader>(p);
    if (traj_->count() >= static_cast<std::uint32_t>(steps + 1) && traj_->n() == fom_->size())
      return;
    traj_.reset();
  }
  log_info("integrating the forced reference run to t = " + tag(horizon));
  {
    const fs::path tmp = p.string() + ".part";
    SnapshotWriter w(tmp, static_cast<std::uint32_t>(fom_->size()), dt());
    Vec x = Vec::Zero(static_cast<Eigen::Index>(fom_->size()));
    fom_->reset_history();
    for (long k = 0; k <= steps; ++k) {
      w.append({x.data(), static_cast<std::size_t>(x.size())});
      if (k < steps)
        x = fom_->step(x, k * dt());
    }
    w.close();
    fs::rename(tmp, p);
  }
  fom_->reset_history();
  traj_ = std::make_unique<SnapshotReader>(p);
}

long Lab::step_of(double t) const { return std::lround(t / dt()); }

long Lab::frames() const { return traj_->count(); }

Vec Lab::state(long k) {
  require(k >= 0 && k < frames(), "Lab: reference step out of range");
  return traj_->frame(static_cast<std::uint32_t>(k));
}

Mat Lab::states(long k0, long k1, int stride) {
  require(stride >= 1 && k0 <= k1, "Lab: bad frame range");
  const long count = (k1 - k0) / stride + 1;
  Mat X(static_cast<Eigen::Index>(fom_->size()), count);
  for (long c = 0; c < count; ++c)
    X.col(c) = state(k0 + c * stride);
  return X;
}

Mat Lab::training_basis(double t1, int r, int stride) {
  const fs::path p =
      dir_ / ("pod_T" + tag(t1) + "_s" + std::to_string(stride) + "_r" + std::to_string(r) + ".adrm");
  if (fs::exists(p)) {
    Mat b = read_frames(p);
    if (b.cols() == r && b.rows() == static_cast<Eigen::Index>(fom_->size()))
      return b;
  }
  const auto t0 = Clock::now();
  PodResult pod = windowed_pod(states(0, step_of(t1), stride), r);
  log_info("training POD on [0, " + tag(t1) + "]: " + tag(seconds_since(t0)) + " s");
  write_frames(p, pod.basis, 0.0);
  return std::move(pod.basis);
}

MovingWindow Lab::tail_window(long k1, int M, int Z) {
  require(k1 - static_cast<long>(M - 1) * Z >= 1,
          "tail_window: window reaches before the first reference step");
  MovingWindow w(M);
  const ForcingConfig &f = fom_->forcing();
  for (int j = M - 1; j >= 0; --j) {
    const long k = k1 - static_cast<long>(j) * Z;
    Vec x = state(k);
    Vec xdot = (x - state(k - 1)) / dt();
    w.push({time_of(k), std::move(x), std::move(xdot), Vec::Constant(1, f.signal(time_of(k)))});
  }
  return w;
}

OnlineResult training_rollout(Lab &lab, const RomModel &model, double t1, int record_every) {
  MovingWindow d0(1);
  d0.push({0.0, lab.state(0), Vec::Zero(lab.state(0).size()), Vec::Constant(1, 0.0)});
  AdaptationConfig cfg;
  cfg.strategy = Strategy::static_model;
  OnlineOptions opt;
  opt.reference = [&lab](long k) { return lab.state(k); };
  opt.record_every = record_every;
  opt.keep_latent = false;
  return run_online(lab.solver(), model, cfg, 0.0, t1, d0, opt);
}

RomModel train_static(Lab &lab, const ExperimentConfig &cfg, TrainReport *report) {
  cfg.validate();
  const auto c0 = Clock::now();
  const long k1 = lab.step_of(cfg.cs.t1);
  const Mat phi = lab.training_basis(cfg.cs.t1, cfg.r, cfg.offline_stride);
  const ProjectionPair pair = ProjectionPair::orthogonal(phi);
  const double dt = lab.dt();
  CavitySolver &fom = lab.solver();
  TrainReport rep;
  RomModel model;

  if (cfg.kind == ModelKind::galerkin) {
    const FullRhs f = [&fom](const Vec &x, double w) { return fom.rhs_fluctuation(x, w); };
    PolynomialOperators ops = galerkin_project(f, pair);
    if (cfg.linear_only)
      ops.Hm.setZero();
    model = GalerkinStatic{pair, std::move(ops)};
  } else {
    // Latent samples z_k with one-step backward-difference derivatives.
    const long count = k1 / cfg.offline_stride;
    Mat z(cfg.r, count), dz(cfg.r, count), u(1, count);
    Vec prev;
    for (long c = 0; c < count; ++c) {
      const long k = (c + 1) * cfg.offline_stride;
      const Vec zk = pair.encode(lab.state(k));
      const Vec zp = pair.encode(lab.state(k - 1));
      z.col(c) = zk;
      dz.col(c) = (zk - zp) / dt;
      u(0, c) = fom.forcing().signal(lab.time_of(k));
    }
    FitOptions fo;
    fo.lambda = cfg.adapt.lambda;
    fo.linear_only = cfg.linear_only;
    FitResult fr = cfg.adapt.lambda ? fit(z, dz, u, fo)
                                    : fit_bounded(z, pair.encode(lab.state(0)), dz, u, fo, dt,
                                                  forcing_input(fom));
    rep.lambda = fr.lambda;
    model = OpinfModel{pair, std::move(fr.ops)};

    if (cfg.kind == ModelKind::nitrom) {
      const int stride = cfg.nitrom_train_stride;
      const long last = (k1 / stride) * stride;
      NitromProblem prob = NitromProblem::uniform(lab.states(0, last, stride), stride, 0.0, dt,
                                                  forcing_input(fom));
      OptimizeOptions oo = cfg.adapt.optimizer;
      oo.freeze_quadratic = cfg.linear_only;
      const int K = cfg.offline_K.value_or(cfg.cs.offline_K);
      NitromParams p0{pair, model_ops(model)};
      if (K > 0) {
        OptimizeResult o = optimize(p0, prob, K, oo);
        rep.history = o.history;
        rep.stalled = o.stalled;
        if (o.stalled)
          log_warning("offline NiTROM stalled after " + std::to_string(o.history.size() - 1) +
                      " iterations");
        model = std::move(o.params);
      } else {
        model = std::move(p0);
      }
    }
  }
  rep.seconds = seconds_since(c0);
  const OnlineResult tr = training_rollout(lab, model, cfg.cs.t1, 1);
  rep.train_error = tr.failed ? std::numeric_limits<double>::infinity()
                              : mean_over(tr.t, tr.field_error, cfg.cs.t0, cfg.cs.t1);
  if (report)
    *report = std::move(rep);
  return model;
}

Envelope fom_envelope(const OnlineResult &r, double t1, double t2) {
  Envelope e{std::numeric_limits<double>::infinity(), 0.0};
  const double from = t2 - 0.25 * (t2 - t1);
  for (std::size_t i = 0; i < r.t.size() && i < r.energy_fom.size(); ++i)
    if (r.t[i] >= from - 1e-12 && r.t[i] <= t2 + 1e-12) {
      e.lo = std::min(e.lo, r.energy_fom[i]);
      e.hi = std::max(e.hi, r.energy_fom[i]);
    }
  if (e.hi == 0.0 && !std::isfinite(e.lo))
    e.lo = 0.0;
  return e;
}

Flags compute_flags(const OnlineResult &r, const Envelope &env) {
  Flags f;
  const std::size_t n = r.energy_rom.size();
  bool finite = true;
  double emax = 0.0;
  bool inside = true, outside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = r.energy_rom[i];
    if (i == 0)
      continue; // initial condition comes from the reference
    if (!std::isfinite(e)) {
      finite = false;
      continue;
    }
    emax = std::max(emax, e);
    if (e < 0.1 * env.lo || e > 5.0 * env.hi)
      inside = false;
    if (e > 5.0 * env.hi || e < env.lo / 5.0)
      outside = true;
  }
  f.diverged = r.failed || !finite || emax > 1e3 * env.hi;
  f.bounded_energy = !r.failed && finite && emax <= 5.0 * env.hi;
  f.tracks_envelope = !r.failed && finite && inside;
  f.exits_envelope = r.failed || !finite || outside;
  if (n >= 3 && !r.failed && finite) {
    double m[3] = {0, 0, 0};
    for (std::size_t i = 1; i < n; ++i) {
      const std::size_t third = std::min<std::size_t>(2, 3 * (i - 1) / (n - 1));
      m[third] = std::max(m[third], r.energy_rom[i]);
    }
    f.decay = m[0] > m[1] && m[1] > m[2];
  }
  return f;
}

json RunSummary::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["label"] = label;
  j["mean_field_error"] = num(mean_field_error);
  j["mean_energy_error"] = num(mean_energy_error);
  j["terminal_energy_rel"] = num(terminal_energy_rel);
  j["terminal_energy_fom"] = num(terminal_energy_fom);
  j["terminal_energy_rom"] = num(terminal_energy_rom);
  j["envelope"] = {envelope.lo, envelope.hi};
  j["flags"] = {{"bounded_energy", flags.bounded_energy},
                {"tracks_envelope", flags.tracks_envelope},
                {"exits_envelope", flags.exits_envelope},
                {"diverged", flags.diverged},
                {"decay", flags.decay}};
  j["fom_queries"] = fom_queries;
  j["events"] = events;
  j["failed"] = failed;
  j["error"] = error;
  j["seconds"] = seconds;
  return j;
}

RunSummary summarize(const std::string &label, const OnlineResult &r, double t1, double t2) {
  RunSummary s;
  s.label = label;
  s.failed = r.failed;
  s.error = r.error;
  s.fom_queries = r.fom_queries;
  s.events = static_cast<long>(r.events.size());
  s.envelope = fom_envelope(r, t1, t2);
  s.flags = compute_flags(r, s.envelope);
  const double inf = std::numeric_limits<double>::infinity();
  if (r.failed || r.field_error.empty()) {
    s.mean_field_error = s.mean_energy_error = s.terminal_energy_rel = inf;
    return s;
  }
  std::vector<double> de(r.t.size());
  for (std::size_t i = 0; i < r.t.size(); ++i)
    de[i] = std::abs(r.energy_rom[i] - r.energy_fom[i]);
  s.mean_field_error = mean_over(r.t, r.field_error, t1, t2);
  s.mean_energy_error = mean_over(r.t, de, t1, t2);
  s.terminal_energy_fom = r.energy_fom.back();
  s.terminal_energy_rom = r.energy_rom.back();
  s.terminal_energy_rel = std::abs(s.terminal_energy_rom - s.terminal_energy_fom) /
                          s.terminal_energy_fom;
  if (!std::isfinite(s.mean_field_error))
    s.mean_field_error = inf;
  return s;
}

namespace {

RomModel initial_model(const RomModel &trained, Strategy s) {
  // Adaptive OpInf keeps an orthogonal pair; every model kind already has one
  // after offline training, so the variant only changes for bookkeeping.
  if (s == Strategy::adaptive_opinf && trained.index() == 0)
    return OpinfModel{model_pair(trained), model_ops(trained)};
  return trained;
}

void write_fields(const fs::path &dir, const Grid &g, const Vec &fom, const Vec &rom) {
  const Vec wf = metrics::vorticity(fom, g);
  const Vec wr = metrics::vorticity(rom, g);
  const double lo = wf.minCoeff(), hi = wf.maxCoeff();
  const auto cells = g.cells();
  write_pgm(dir / "vorticity_fom.pgm", {wf.data(), cells}, g.nx, g.ny, lo, hi);
  write_pgm(dir / "vorticity_rom.pgm", {wr.data(), cells}, g.nx, g.ny, lo, hi);
  for (int c = 0; c < 2; ++c) {
    const char *name = c == 0 ? "u" : "v";
    const double *pf = fom.data() + c * cells;
    const double *pr = rom.data() + c * cells;
    const auto [mn, mx] = std::minmax_element(pf, pf + cells);
    write_pgm(dir / (std::string(name) + "_fom.pgm"), {pf, cells}, g.nx, g.ny, *mn, *mx);
    write_pgm(dir / (std::string(name) + "_rom.pgm"), {pr, cells}, g.nx, g.ny, *mn, *mx);
  }
}

void write_slice(const fs::path &path, const Grid &g, const Vec &fom, const Vec &rom) {
  const metrics::Slice sf = metrics::u_slice(fom, g);
  const metrics::Slice sr = metrics::u_slice(rom, g);
  CsvWriter csv(path);
  csv.header({"row", "y", "x", "u_fom", "u_rom"});
  for (int i = 0; i < g.nx; ++i) {
    csv.field(sf.row);
    csv.field(sf.y);
    csv.field(sf.x[i]);
    csv.field(sf.u[i]);
    csv.field(sr.u[i]);
    csv.end_row();
  }
}

} // namespace

CaseResult run_case(Lab &lab, const ExperimentConfig &cfg, const RomModel *static_model,
                    bool write) {
  cfg.validate();
  CaseResult res;
  if (write)
    fs::create_directories(cfg.out);
  const fs::path hist = cfg.out / "history.csv";
  if (write && fs::exists(hist))
    fs::remove(hist);

  if (static_model) {
    res.static_model = *static_model;
  } else {
    res.static_model = train_static(lab, cfg, &res.train);
    if (write && !res.train.history.empty())
      append_history_csv(hist, -1, res.train.history);
  }

  const long k1 = lab.step_of(cfg.cs.t1);
  const MovingWindow d0 = lab.tail_window(k1, cfg.adapt.M, cfg.adapt.Z);
  OnlineOptions opt;
  opt.reference = [&lab, k1](long k) { return lab.state(k1 + k); };
  opt.record_every = cfg.record_every;
  opt.keep_latent = false;
  if (write)
    opt.on_optimize = [&hist](int ev, const OptimizeResult &o) {
      append_history_csv(hist, ev, o.history);
    };

  const auto c0 = Clock::now();
  res.online = run_online(lab.solver(), initial_model(res.static_model, cfg.adapt.strategy),
                          cfg.adapt, cfg.cs.t1, cfg.cs.t2, d0, opt);
  const double secs = seconds_since(c0);
  std::string label = std::string(kind_name(cfg.kind)) + "/" + strategy_name(cfg.adapt.strategy);
  res.summary = summarize(label, res.online, cfg.cs.t1, cfg.cs.t2);
  res.summary.seconds = secs;
  if (res.online.failed)
    log_warning("run " + label + " failed: " + res.online.error);

  if (write) {
    write_metrics_csv(cfg.out / "metrics.csv", res.online);
    write_events_csv(cfg.out / "events.csv", res.online);
    const long kend = k1 + step_count(cfg.cs.t1, cfg.cs.t2, lab.dt());
    const Vec ref = lab.state(kend);
    const Vec &rom = res.online.final_state;
    if (rom.allFinite()) {
      write_slice(cfg.out / "slice.csv", lab.grid(), ref, rom);
      write_fields(cfg.out, lab.grid(), ref, rom);
    }
    json j;
    j["config"] = cfg.to_json();
    j["summary"] = res.summary.to_json();
    j["train"] = {{"seconds", res.train.seconds},
                  {"train_error", std::isfinite(res.train.train_error)
                                      ? json(res.train.train_error)
                                      : json(nullptr)},
                  {"offline_iterations",
                   res.train.history.empty() ? 0 : res.train.history.size() - 1},
                  {"stalled", res.train.stalled},
                  {"lambda", res.train.lambda}};
    if (cfg.adapt.strategy != Strategy::static_model)
      j["timing"] = timing_report(res.online).to_json();
    std::ofstream(cfg.out / "summary.json") << j.dump(2) << '\n';
  }
  return res;
}

AblationAxis parse_axis(const std::string &s) {
  for (AblationAxis a : {AblationAxis::Z, AblationAxis::M, AblationAxis::K, AblationAxis::basis})
    if (s == axis_name(a))
      return a;
  throw PreconditionError("unknown ablation axis '" + s + "'");
}

const char *axis_name(AblationAxis a) {
  switch (a) {
  case AblationAxis::Z:
    return "Z";
  case AblationAxis::M:
    return "M";
  case AblationAxis::K:
    return "K";
  case AblationAxis::basis:
    return "basis";
  }
  return "?";
}

std::vector<AblationPoint> ablate(Lab &lab, const ExperimentConfig &base, AblationAxis axis,
                                  const std::vector<double> &grid,
                                  const RomModel *static_model) {
  require(!grid.empty(), "ablate: empty grid");
  std::optional<RomModel> trained;
  if (!static_model) {
    trained = train_static(lab, base);
    static_model = &*trained;
  }
  std::vector<AblationPoint> out;
  for (double v : grid) {
    ExperimentConfig cfg = base;
    switch (axis) {
    case AblationAxis::Z:
      cfg.adapt.Z = static_cast<int>(v);
      cfg.adapt.M = 1000 / cfg.adapt.Z + 1;
      break;
    case AblationAxis::M:
      cfg.adapt.M = static_cast<int>(v);
      break;
    case AblationAxis::K:
      cfg.adapt.K = static_cast<int>(v);
      break;
    case AblationAxis::basis:
      cfg.adapt.basis = v != 0.0 ? BasisUpdate::isvd : BasisUpdate::windowed_svd;
      break;
    }
    cfg.out = base.out / (std::string(axis_name(axis)) + "_" + tag(v));
    AblationPoint pt;
    pt.value = v;
    pt.M = cfg.adapt.M;
    pt.Z = cfg.adapt.Z;
    pt.K = cfg.adapt.K;
    try {
      pt.summary = run_case(lab, cfg, static_model).summary;
    } catch (const std::exception &e) {
      pt.summary.failed = true;
      pt.summary.error = e.what();
      pt.summary.mean_field_error = std::numeric_limits<double>::infinity();
      pt.summary.flags.diverged = true;
      log_warning(std::string("ablation point ") + axis_name(axis) + "=" + tag(v) +
                  " failed: " + e.what());
    }
    out.push_back(std::move(pt));
  }
  return out;
}

void write_ablation_csv(const fs::path &path, AblationAxis axis,
                        const std::vector<AblationPoint> &pts) {
  CsvWriter csv(path);
  csv.header({axis_name(axis), "M", "Z", "K", "mean_field_error", "mean_energy_error",
              "terminal_energy_rel", "bounded_energy", "diverged", "decay", "failed"});
  for (const auto &p : pts) {
    csv.field(p.value);
    csv.field(p.M);
    csv.field(p.Z);
    csv.field(p.K);
    csv.field(p.summary.mean_field_error);
    csv.field(p.summary.mean_energy_error);
    csv.field(p.summary.terminal_energy_rel);
    csv.field(p.summary.flags.bounded_energy ? 1 : 0);
    csv.field(p.summary.flags.diverged ? 1 : 0);
    csv.field(p.summary.flags.decay ? 1 : 0);
    csv.field(p.summary.failed ? 1 : 0);
    csv.end_row();
  }
}

json TimingReport::to_json() const {
  return {{"rom_step_ms", rom_step}, {"fom_step_ms", fom_step},     {"svd_ms", svd},
          {"opinf_refit_ms", opinf_refit}, {"nitrom_iter_ms", nitrom_iter},
          {"events", events},      {"fom_queries", fom_queries}, {"ordered", ordered()}};
}

bool improves_on(const RunSummary &adaptive, const RunSummary &static_run) {
  if (adaptive.failed || !std::isfinite(adaptive.mean_field_error))
    return false;
  if (static_run.failed || !std::isfinite(static_run.mean_field_error))
    return true;
  return adaptive.mean_field_error < 0.5 * static_run.mean_field_error;
}

TimingReport timing_report(const OnlineResult &r) {
  TimingReport t;
  t.rom_step = r.rom_step_ms();
  t.events = static_cast<long>(r.events.size());
  t.fom_queries = r.fom_queries;
  double fom = 0, svd = 0, refit = 0, nit = 0;
  long nsvd = 0, niters = 0;
  for (const auto &e : r.events) {
    fom += e.fom_ms;
    if (e.svd_ms > 0 || e.refit_ms > 0) {
      svd += e.svd_ms;
      refit += e.refit_ms;
      ++nsvd;
    }
    nit += e.nitrom_ms;
    niters += e.nitrom_iters;
  }
  if (!r.events.empty())
    t.fom_step = fom / static_cast<double>(r.events.size());
  if (nsvd) {
    t.svd = svd / nsvd;
    t.opinf_refit = refit / nsvd;
  }
  if (niters)
    t.nitrom_iter = nit / niters;
  return t;
}

double spearman(const std::vector<double> &a, const std::vector<double> &b) {
  require(a.size() == b.size() && a.size() >= 2, "spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double> &v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
        ++j;
      for (std::size_t k = i; k <= j; ++k)
        r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

} // namespace adrom::harness
