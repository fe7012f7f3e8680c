#pragma once

// Online loop: latent rollout interleaved with single-step full-order
// corrections, a moving data window and model adaptation every Z steps.

#include "adrom/cavity.hpp"
#include "adrom/nitrom.hpp"
#include "adrom/opinf.hpp"
#include "adrom/window.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace adrom {

struct GalerkinStatic {
  ProjectionPair pair;
  PolynomialOperators ops;
};

struct OpinfModel {
  ProjectionPair pair; ///< orthogonal
  PolynomialOperators ops;
};

using RomModel = std::variant<GalerkinStatic, OpinfModel, NitromParams>;

const ProjectionPair &model_pair(const RomModel &m);
const PolynomialOperators &model_ops(const RomModel &m);
const char *model_kind_name(const RomModel &m);
NitromParams as_nitrom(const RomModel &m);

enum class Strategy { static_model, adaptive_opinf, adaptive_nitrom, hybrid };

const char *strategy_name(Strategy s);
Strategy parse_strategy(const std::string &s);

struct AdaptationConfig {
  int M = 100;
  int Z = 10;
  int K = 10;
  Strategy strategy = Strategy::static_model;
  BasisUpdate basis = BasisUpdate::windowed_svd;
  std::optional<double> lambda;
  OptimizeOptions optimizer;
  bool evaluate_costs = true; ///< window costs before/after OpInf refits

  void validate() const;
};

struct LiftResult {
  Vec x_hat; ///< decoded state at t - dt
  Vec x;     ///< full-order state at t
  Vec xdot;  ///< (x - x_hat) / dt
};

/// Decodes z (the latent state at t - dt) and advances the full-order model
/// one explicit-Euler step to t.
LiftResult lift_and_correct(const RomModel &model, const Vec &z, double t, CavitySolver &fom);

struct EventRecord {
  int index = 0;
  double t = 0.0;
  Strategy strategy = Strategy::static_model;
  double J_prev = 0.0;  ///< window cost of the model in use before the event
  double J_entry = 0.0; ///< cost at the start of manifold optimization (= J_prev for warm starts)
  double J_exit = 0.0;  ///< cost of the adapted model
  double fom_ms = 0.0;
  double svd_ms = 0.0;
  double refit_ms = 0.0;
  double nitrom_ms = 0.0;
  int nitrom_iters = 0;
  bool stalled = false;
  double projection_error = 0.0; ///< |x - P_old x| / |x| of the fresh snapshot
  double reference_error = 0.0;  ///< |x_hat - x_ref(t - dt)| when a reference is given
};

/// Full-order fluctuation at fine step k (k = 0 at t1).
using ReferenceFunction = std::function<Vec(long k)>;

struct OnlineOptions {
  ReferenceFunction reference; ///< optional
  int record_every = 1;
  bool keep_latent = true;     ///< store the latent trajectory
  /// Called after every manifold optimization with the event index.
  std::function<void(int, const OptimizeResult &)> on_optimize;
};

struct OnlineResult {
  std::vector<double> t;
  std::vector<double> energy_rom;
  std::vector<double> energy_fom;  ///< empty without reference
  std::vector<double> field_error; ///< empty without reference
  Mat latent;                      ///< r x (steps+1) when keep_latent
  std::vector<EventRecord> events;
  long fom_queries = 0;
  long rom_steps = 0;
  double rom_ms_total = 0.0;
  Vec final_state;
  RomModel final_model;
  bool failed = false;
  int failed_event = -1;
  long failed_step = -1;
  std::string error;

  double rom_step_ms() const { return rom_steps ? rom_ms_total / rom_steps : 0.0; }
};

/// Runs the adaptive loop over (t1, t2]. `d0` holds M samples ending at t1
/// spaced Z dt; the initial latent state encodes its newest sample. The
/// solver's base flow must be set. Failures are recorded in the result,
/// which keeps everything produced up to that point.
OnlineResult run_online(CavitySolver &fom, const RomModel &model0,
                        const AdaptationConfig &cfg, double t1, double t2,
                        const MovingWindow &d0, const OnlineOptions &opt = {});

/// Number of fine steps in (t1, t2].
long step_count(double t1, double t2, double dt);

void write_metrics_csv(const std::filesystem::path &path, const OnlineResult &r);
void write_events_csv(const std::filesystem::path &path, const OnlineResult &r);

} // namespace adrom
