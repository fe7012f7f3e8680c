#pragma once

// Experiment driver: case definitions, cached offline data, static model
// training, online runs, ablation sweeps and timing summaries.

#include "adrom/adaptive.hpp"
#include "adrom/cavity.hpp"
#include "adrom/snapshot_store.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adrom::harness {

namespace fs = std::filesystem;

/// Train on [t0, t1], predict (t1, t2].
struct CaseSpec {
  int id = 1;
  double t0 = 0.0;
  double t1 = 12.5;
  double t2 = 20.0;
  int M = 100;
  int Z = 10;
  int K = 10;
  int offline_K = 60; ///< static NiTROM iterations

  static CaseSpec get(int id);
};

enum class ModelKind { galerkin, opinf, nitrom };
const char *kind_name(ModelKind k);
ModelKind parse_kind(const std::string &s);

struct ExperimentConfig {
  CaseSpec cs;
  ModelKind kind = ModelKind::opinf;
  AdaptationConfig adapt;
  int r = 10;
  std::uint64_t seed = 0;
  fs::path out = "out";
  bool linear_only = false;
  int offline_stride = 1;       ///< snapshot stride for POD and OpInf training
  int nitrom_train_stride = 10; ///< sample stride of the offline NiTROM cost
  std::optional<int> offline_K; ///< case default when empty
  int record_every = 1;

  /// Case defaults for M, Z, K applied to `adapt`.
  static ExperimentConfig for_case(int id);
  void validate() const;
  nlohmann::json to_json() const;
  /// Keys missing from `j` keep the values of `base`.
  static ExperimentConfig from_json(const nlohmann::json &j, ExperimentConfig base);
};

/// ADROM_CACHE_DIR, or ./adrom-cache.
fs::path default_cache_dir();

/// Offline data shared by all experiments: base flow, the forced reference
/// trajectory from the base flow, and POD bases. Everything is computed on
/// first use and stored in the cache directory.
class Lab {
public:
  explicit Lab(fs::path cache_dir = default_cache_dir(), double horizon = 20.0);

  CavitySolver &solver() { return *fom_; }
  const Grid &grid() const { return fom_->grid(); }
  double dt() const { return fom_->dt(); }
  const fs::path &cache_dir() const { return dir_; }

  /// Fine-step index of time t.
  long step_of(double t) const;
  /// Fluctuation at fine step k of the forced reference run.
  Vec state(long k);
  /// Columns k0, k0+stride, ... up to and including k1.
  Mat states(long k0, long k1, int stride = 1);
  double time_of(long k) const { return k * dt(); }
  long frames() const;

  /// POD basis of the training snapshots [0, t1] (cached).
  Mat training_basis(double t1, int r, int stride = 1);

  /// Offline window: M samples at stride Z ending at fine step k1, each with
  /// the one-step backward-difference derivative.
  MovingWindow tail_window(long k1, int M, int Z);

private:
  void ensure_base_flow();
  void ensure_trajectory(double horizon);

  fs::path dir_;
  std::unique_ptr<CavitySolver> fom_;
  std::unique_ptr<SnapshotReader> traj_;
};

struct TrainReport {
  std::vector<IterationRecord> history; ///< offline NiTROM only
  double seconds = 0.0;
  double train_error = 0.0; ///< time-averaged field error of a rollout over [t0, t1]
  bool stalled = false;
  double lambda = 0.0; ///< ridge weight of the OpInf fit (NiTROM initial guess)
};

/// Static model trained on the case's training interval.
RomModel train_static(Lab &lab, const ExperimentConfig &cfg, TrainReport *report = nullptr);

/// Rollout of a static model over [0, t1] from the training initial state,
/// returning the field error and energies at every step.
OnlineResult training_rollout(Lab &lab, const RomModel &model, double t1, int record_every = 1);

/// Energy envelope [min, max] of the reference over the final quarter of
/// (t1, t2].
struct Envelope {
  double lo = 0.0;
  double hi = 0.0;
};
Envelope fom_envelope(const OnlineResult &r, double t1, double t2);

struct Flags {
  bool bounded_energy = false;
  bool tracks_envelope = false; ///< within [0.1 lo, 5 hi] throughout
  bool exits_envelope = false;  ///< above 5 hi or below lo / 5 at some time
  bool diverged = false;
  bool decay = false;           ///< per-third maximum energy strictly decreasing
};
Flags compute_flags(const OnlineResult &r, const Envelope &env);

struct RunSummary {
  std::string label;
  double mean_field_error = 0.0;   ///< over (t1, t2]
  double mean_energy_error = 0.0;  ///< mean |E_rom - E_fom| over (t1, t2]
  double terminal_energy_rel = 0.0;
  double terminal_energy_fom = 0.0;
  double terminal_energy_rom = 0.0;
  Envelope envelope;
  Flags flags;
  long fom_queries = 0;
  long events = 0;
  bool failed = false;
  std::string error;
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

RunSummary summarize(const std::string &label, const OnlineResult &r, double t1, double t2);

/// An adaptive run improves on a static one when its time-averaged field
/// error is below half the static error. Failed runs never improve.
bool improves_on(const RunSummary &adaptive, const RunSummary &static_run);

struct CaseResult {
  RomModel static_model;
  TrainReport train;
  OnlineResult online;
  RunSummary summary;
};

/// train_static, then run_online over the test interval; writes
/// metrics.csv, events.csv, history.csv (offline and online NiTROM
/// iterations), slice.csv, PGM fields at t2 and summary.json into cfg.out.
/// `static_model` skips training when given.
CaseResult run_case(Lab &lab, const ExperimentConfig &cfg,
                    const RomModel *static_model = nullptr, bool write = true);

enum class AblationAxis { Z, M, K, basis };
AblationAxis parse_axis(const std::string &s);
const char *axis_name(AblationAxis a);

struct AblationPoint {
  double value = 0.0; ///< Z, M, K, or 0/1 for windowed-svd/isvd
  int M = 0, Z = 0, K = 0;
  RunSummary summary;
};

/// One run per grid value. The Z axis co-varies M = 1000/Z + 1 so that the
/// window spans 1000 fine steps. Failures are recorded per point.
std::vector<AblationPoint> ablate(Lab &lab, const ExperimentConfig &base, AblationAxis axis,
                                  const std::vector<double> &grid,
                                  const RomModel *static_model = nullptr);
void write_ablation_csv(const fs::path &path, AblationAxis axis,
                        const std::vector<AblationPoint> &pts);

/// Per-operation average wall-clock times in milliseconds.
struct TimingReport {
  double rom_step = 0.0;
  double fom_step = 0.0;
  double svd = 0.0;
  double opinf_refit = 0.0;
  double nitrom_iter = 0.0;
  long events = 0;
  long fom_queries = 0;

  bool ordered() const {
    return rom_step < fom_step && fom_step < svd && svd < opinf_refit && opinf_refit < nitrom_iter;
  }
  nlohmann::json to_json() const;
};

TimingReport timing_report(const OnlineResult &r);

/// Spearman rank correlation.
double spearman(const std::vector<double> &a, const std::vector<double> &b);

} // namespace adrom::harness
