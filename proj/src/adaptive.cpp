#include "adrom/adaptive.hpp"

#include "adrom/csv.hpp"
#include "adrom/metrics.hpp"

#include <chrono>
#include <cmath>

namespace adrom {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

InputFunction forcing_input(const CavitySolver &fom) {
  const ForcingConfig f = fom.forcing();
  return [f](double t) { return Vec::Constant(1, f.signal(t)); };
}

} // namespace

const ProjectionPair &model_pair(const RomModel &m) {
  return std::visit([](const auto &v) -> const ProjectionPair & { return v.pair; }, m);
}

const PolynomialOperators &model_ops(const RomModel &m) {
  return std::visit([](const auto &v) -> const PolynomialOperators & { return v.ops; }, m);
}

const char *model_kind_name(const RomModel &m) {
  switch (m.index()) {
  case 0:
    return "galerkin";
  case 1:
    return "opinf";
  default:
    return "nitrom";
  }
}

NitromParams as_nitrom(const RomModel &m) { return {model_pair(m), model_ops(m)}; }

const char *strategy_name(Strategy s) {
  switch (s) {
  case Strategy::static_model:
    return "static";
  case Strategy::adaptive_opinf:
    return "adaptive-opinf";
  case Strategy::adaptive_nitrom:
    return "adaptive-nitrom";
  case Strategy::hybrid:
    return "hybrid";
  }
  return "?";
}

Strategy parse_strategy(const std::string &s) {
  for (Strategy v : {Strategy::static_model, Strategy::adaptive_opinf,
                     Strategy::adaptive_nitrom, Strategy::hybrid})
    if (s == strategy_name(v))
      return v;
  throw PreconditionError("unknown strategy '" + s + "'");
}

void AdaptationConfig::validate() const {
  require(M >= 1, "AdaptationConfig: M must be at least 1");
  require(Z >= 1, "AdaptationConfig: Z must be at least 1");
  if (strategy == Strategy::adaptive_nitrom)
    require(K >= 1, "AdaptationConfig: K must be at least 1");
  if (strategy == Strategy::hybrid)
    require(K >= 0, "AdaptationConfig: K must be nonnegative");
  if (strategy == Strategy::adaptive_opinf || strategy == Strategy::hybrid)
    require(M >= 2, "AdaptationConfig: operator refits need M >= 2");
  if (lambda)
    require(*lambda >= 0.0, "AdaptationConfig: lambda must be nonnegative");
}

long step_count(double t1, double t2, double dt) {
  require(t2 >= t1 && dt > 0, "step_count: need t2 >= t1 and dt > 0");
  return std::lround((t2 - t1) / dt);
}

LiftResult lift_and_correct(const RomModel &model, const Vec &z, double t, CavitySolver &fom) {
  LiftResult out;
  out.x_hat = model_pair(model).decode(z);
  fom.reset_history();
  out.x = fom.step(out.x_hat, t - fom.dt());
  out.xdot = (out.x - out.x_hat) / fom.dt();
  return out;
}

OnlineResult run_online(CavitySolver &fom, const RomModel &model0,
                        const AdaptationConfig &cfg, double t1, double t2,
                        const MovingWindow &d0, const OnlineOptions &opt) {
  cfg.validate();
  require(fom.has_base_flow(), "run_online: solver has no base flow");
  require(!d0.empty(), "run_online: initial window is empty");
  require(std::abs(d0.newest().t - t1) <= 1e-9 * std::max(1.0, std::abs(t1)),
          "run_online: initial window must end at t1");
  require(opt.record_every >= 1, "run_online: record_every must be positive");

  const double dt = fom.dt();
  const long N = step_count(t1, t2, dt);
  const InputFunction input = forcing_input(fom);
  const bool adaptive = cfg.strategy != Strategy::static_model;

  OnlineResult res;
  res.final_model = model0;
  RomModel &model = res.final_model;
  MovingWindow window = d0;
  Vec z = model_pair(model).encode(d0.newest().x);
  const int r = static_cast<int>(z.size());
  if (opt.keep_latent) {
    res.latent.resize(r, N + 1);
    res.latent.col(0) = z;
  }

  std::optional<IncrementalSvd> isvd;
  if (adaptive && cfg.basis == BasisUpdate::isvd &&
      (cfg.strategy == Strategy::adaptive_opinf || cfg.strategy == Strategy::hybrid))
    isvd.emplace(window.states(), r);

  auto record = [&](long k, const Vec &x_rom) {
    if (k % opt.record_every != 0 && k != N)
      return;
    res.t.push_back(t1 + k * dt);
    res.energy_rom.push_back(metrics::energy(x_rom));
    if (opt.reference) {
      const Vec ref = opt.reference(k);
      res.energy_fom.push_back(metrics::energy(ref));
      res.field_error.push_back(metrics::field_error(ref, x_rom));
    }
  };
  record(0, model_pair(model).decode(z));

  Ab2Integrator integ;
  int event = 0;
  long k = 1;
  try {
    for (; k <= N; ++k) {
      const double t = t1 + k * dt;
      if (adaptive && k % cfg.Z == 0) {
        EventRecord ev;
        ev.index = event;
        ev.t = t;
        ev.strategy = cfg.strategy;
        auto c0 = Clock::now();
        LiftResult lift = lift_and_correct(model, z, t, fom);
        ev.fom_ms = ms_since(c0);
        ++res.fom_queries;
        const ProjectionPair &old_pair = model_pair(model);
        const double xn = lift.x.norm();
        ev.projection_error = xn > 0 ? (lift.x - old_pair.project(lift.x)).norm() / xn : 0.0;
        if (opt.reference)
          ev.reference_error = (lift.x_hat - opt.reference(k - 1)).norm();

        window.push({t, lift.x, lift.xdot, input(t)});
        if (isvd)
          isvd->update(lift.x);

        const NitromProblem prob = NitromProblem::from_window(window, dt, input);
        const Mat prev_basis = old_pair.phi();
        if (cfg.evaluate_costs || cfg.strategy == Strategy::adaptive_nitrom)
          ev.J_prev = cost(as_nitrom(model), prob).J;
        OpinfAdaptOptions oo;
        oo.r = r;
        oo.fit.lambda = cfg.lambda;
        oo.basis = cfg.basis;

        switch (cfg.strategy) {
        case Strategy::adaptive_opinf: {
          OpinfUpdate up = adapt_opinf(window, oo, &prev_basis, isvd ? &*isvd : nullptr);
          ev.svd_ms = up.svd_ms;
          ev.refit_ms = up.refit_ms;
          model = OpinfModel{std::move(up.pair), std::move(up.ops)};
          ev.J_entry = ev.J_prev;
          if (cfg.evaluate_costs)
            ev.J_exit = cost(as_nitrom(model), prob).J;
          break;
        }
        case Strategy::adaptive_nitrom: {
          c0 = Clock::now();
          OptimizeResult o = adapt_nitrom(as_nitrom(model), prob, cfg.K, cfg.optimizer);
          ev.nitrom_ms = ms_since(c0);
          ev.nitrom_iters = static_cast<int>(o.history.size()) - 1;
          ev.stalled = o.stalled;
          ev.J_entry = o.entry_J();
          ev.J_exit = o.exit_J();
          if (opt.on_optimize)
            opt.on_optimize(event, o);
          model = std::move(o.params);
          break;
        }
        case Strategy::hybrid: {
          OpinfUpdate up = adapt_opinf(window, oo, &prev_basis, isvd ? &*isvd : nullptr);
          ev.svd_ms = up.svd_ms;
          ev.refit_ms = up.refit_ms;
          NitromParams p = NitromParams::from_opinf(up);
          if (cfg.K > 0) {
            c0 = Clock::now();
            OptimizeResult o = optimize(p, prob, cfg.K, cfg.optimizer);
            ev.nitrom_ms = ms_since(c0);
            ev.nitrom_iters = static_cast<int>(o.history.size()) - 1;
            ev.stalled = o.stalled;
            ev.J_entry = o.entry_J();
            ev.J_exit = o.exit_J();
            if (opt.on_optimize)
              opt.on_optimize(event, o);
            p = std::move(o.params);
          } else if (cfg.evaluate_costs) {
            ev.J_entry = ev.J_exit = cost(p, prob).J;
          }
          model = std::move(p);
          break;
        }
        case Strategy::static_model:
          break;
        }
        z = model_pair(model).encode(lift.x);
        integ.reset();
        res.events.push_back(ev);
        ++event;
      } else {
        const auto c0 = Clock::now();
        const Vec u = input(t1 + (k - 1) * dt);
        try {
          z = integ.step(model_ops(model), z, u, dt);
        } catch (const NumericalError &) {
          throw NumericalError("run_online: non-finite latent state at step " +
                               std::to_string(k));
        }
        res.rom_ms_total += ms_since(c0);
        ++res.rom_steps;
      }
      if (opt.keep_latent)
        res.latent.col(k) = z;
      record(k, model_pair(model).decode(z));
    }
  } catch (const std::exception &e) {
    res.failed = true;
    res.failed_step = k;
    res.failed_event = adaptive && k % cfg.Z == 0 ? event : -1;
    res.error = e.what();
    if (opt.keep_latent)
      res.latent.conservativeResize(Eigen::NoChange, k);
  }
  res.final_state = model_pair(model).decode(z);
  return res;
}

void write_metrics_csv(const std::filesystem::path &path, const OnlineResult &r) {
  CsvWriter csv(path);
  const bool ref = !r.energy_fom.empty();
  if (ref)
    csv.header({"t", "E_fom", "E_rom", "field_error"});
  else
    csv.header({"t", "E_rom"});
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    csv.field(r.t[i]);
    if (ref)
      csv.field(r.energy_fom[i]);
    csv.field(r.energy_rom[i]);
    if (ref)
      csv.field(r.field_error[i]);
    csv.end_row();
  }
}

void write_events_csv(const std::filesystem::path &path, const OnlineResult &r) {
  CsvWriter csv(path);
  csv.header({"event", "t", "strategy", "J_prev", "J_entry", "J_exit", "fom_ms", "svd_ms",
              "refit_ms", "nitrom_ms", "nitrom_iters", "stalled", "projection_error",
              "reference_error"});
  for (const auto &e : r.events) {
    csv.field(e.index);
    csv.field(e.t);
    csv.field(strategy_name(e.strategy));
    csv.field(e.J_prev);
    csv.field(e.J_entry);
    csv.field(e.J_exit);
    csv.field(e.fom_ms);
    csv.field(e.svd_ms);
    csv.field(e.refit_ms);
    csv.field(e.nitrom_ms);
    csv.field(e.nitrom_iters);
    csv.field(e.stalled ? 1 : 0);
    csv.field(e.projection_error);
    csv.field(e.reference_error);
    csv.end_row();
  }
}

} // namespace adrom
