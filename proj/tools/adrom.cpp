#include "adrom/csv.hpp"
#include "adrom/harness.hpp"
#include "adrom/log.hpp"
#include "adrom/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace adrom;
using namespace adrom::harness;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::optional<int> case_id;
  std::optional<std::string> model;
  std::optional<std::string> strategy;
  std::optional<int> Z, M, K, r;
  std::optional<double> lambda;
  std::optional<std::string> basis;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> offline_K;
  std::optional<int> record_every;
  bool linear_only = false;
  std::string cache;
};

ExperimentConfig resolve(const Overrides &o) {
  json j = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in)
      throw IoError("cannot open config " + o.config);
    in >> j;
  }
  if (o.case_id)
    j["case"] = *o.case_id;
  if (o.model)
    j["model"] = *o.model;
  if (o.strategy)
    j["strategy"] = *o.strategy;
  if (o.Z)
    j["Z"] = *o.Z;
  if (o.M)
    j["M"] = *o.M;
  if (o.K)
    j["K"] = *o.K;
  if (o.r)
    j["r"] = *o.r;
  if (o.lambda)
    j["lambda"] = *o.lambda;
  if (o.basis)
    j["basis"] = *o.basis;
  if (o.seed)
    j["seed"] = *o.seed;
  if (o.out)
    j["out"] = *o.out;
  if (o.offline_K)
    j["offline_K"] = *o.offline_K;
  if (o.record_every)
    j["record_every"] = *o.record_every;
  if (o.linear_only)
    j["linear_only"] = true;
  const int id = j.value("case", 1);
  ExperimentConfig base = ExperimentConfig::for_case(id);
  // A case given only in the file or on the command line sets the defaults;
  // the remaining keys override them.
  j.erase("case");
  ExperimentConfig cfg = ExperimentConfig::from_json(j, base);
  if (!j.contains("model")) {
    const Strategy s = cfg.adapt.strategy;
    cfg.kind = s == Strategy::adaptive_opinf ? ModelKind::opinf
               : s == Strategy::static_model ? ModelKind::opinf
                                             : ModelKind::nitrom;
  }
  cfg.validate();
  return cfg;
}

fs::path cache_of(const Overrides &o) {
  return o.cache.empty() ? default_cache_dir() : fs::path(o.cache);
}

void print_summary(const RunSummary &s) {
  std::printf("%-28s mean e = %.6g  mean |dE| = %.6g  terminal dE/E = %.4g  "
              "bounded=%d tracks=%d exits=%d diverged=%d decay=%d%s\n",
              s.label.c_str(), s.mean_field_error, s.mean_energy_error, s.terminal_energy_rel,
              s.flags.bounded_energy, s.flags.tracks_envelope, s.flags.exits_envelope,
              s.flags.diverged, s.flags.decay, s.failed ? "  FAILED" : "");
}

void print_timing(const TimingReport &t) {
  std::printf("operation            avg wall-clock [ms]\n");
  std::printf("ROM step             %.6g\n", t.rom_step);
  std::printf("FOM step             %.6g\n", t.fom_step);
  std::printf("SVD (window)         %.6g\n", t.svd);
  std::printf("OpInf refit          %.6g\n", t.opinf_refit);
  std::printf("NiTROM iteration     %.6g\n", t.nitrom_iter);
  std::printf("events %ld, FOM queries %ld, ordering %s\n", t.events, t.fom_queries,
              t.ordered() ? "holds" : "violated");
}

std::vector<double> parse_grid(const std::string &s) {
  std::vector<double> g;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      g.push_back(item == "isvd" ? 1.0 : item == "windowed-svd" ? 0.0 : std::stod(item));
  return g;
}

int cmd_steady(const Overrides &o) {
  Lab lab(cache_of(o), 0.0);
  CavitySolver &fom = lab.solver();
  const Vec V = fom.base_flow();
  Vec r = fom.full_rhs(V, 0.0);
  std::printf("base flow: |V| = %.12g, |dV/dt|/|V| = %.3e, max divergence = %.3e\n", V.norm(),
              r.norm() / V.norm(), fom.max_divergence(V));
  return 0;
}

int cmd_fom_run(const Overrides &o, double horizon) {
  const ExperimentConfig cfg = resolve(o);
  Lab lab(cache_of(o), horizon);
  fs::create_directories(cfg.out);
  CsvWriter csv(cfg.out / "fom_energy.csv");
  csv.header({"t", "E_fom", "max_divergence"});
  const long last = lab.step_of(horizon);
  for (long k = 0; k <= last; k += cfg.record_every) {
    const Vec x = lab.state(k);
    csv.field(lab.time_of(k));
    csv.field(metrics::energy(x));
    csv.field(lab.solver().max_divergence(x + lab.solver().base_flow()));
    csv.end_row();
  }
  const Vec xe = lab.state(last);
  const Vec w = metrics::vorticity(xe, lab.grid());
  write_pgm(cfg.out / "vorticity_fom.pgm", {w.data(), lab.grid().cells()}, lab.grid().nx,
            lab.grid().ny);
  std::printf("reference run to t = %g written to %s\n", horizon, cfg.out.c_str());
  return 0;
}

int cmd_train(const Overrides &o) {
  const ExperimentConfig cfg = resolve(o);
  Lab lab(cache_of(o));
  TrainReport rep;
  const RomModel m = train_static(lab, cfg, &rep);
  fs::create_directories(cfg.out);
  save_operators(cfg.out / "operators.bin", model_ops(m));
  write_frames(cfg.out / "phi.adrm", model_pair(m).phi(), 0.0);
  write_frames(cfg.out / "psi.adrm", model_pair(m).psi(), 0.0);
  const fs::path hist = cfg.out / "history.csv";
  if (fs::exists(hist))
    fs::remove(hist);
  if (!rep.history.empty())
    append_history_csv(hist, -1, rep.history);
  json j;
  j["config"] = cfg.to_json();
  j["train_error"] = rep.train_error;
  j["lambda"] = rep.lambda;
  j["seconds"] = rep.seconds;
  j["iterations"] = rep.history.empty() ? 0 : rep.history.size() - 1;
  j["stalled"] = rep.stalled;
  std::ofstream(cfg.out / "train.json") << j.dump(2) << '\n';
  std::printf("%s (case %d, r = %d%s): training-window mean field error %.6g, lambda %.3g, %.1f s\n",
              kind_name(cfg.kind), cfg.cs.id, cfg.r, cfg.linear_only ? ", linear" : "",
              rep.train_error, rep.lambda, rep.seconds);
  return 0;
}

int cmd_run_case(const Overrides &o) {
  const ExperimentConfig cfg = resolve(o);
  Lab lab(cache_of(o));
  const CaseResult res = run_case(lab, cfg);
  print_summary(res.summary);
  if (cfg.adapt.strategy != Strategy::static_model)
    print_timing(timing_report(res.online));
  return res.summary.failed ? 2 : 0;
}

int cmd_ablate(const Overrides &o, const std::string &axis, const std::string &grid) {
  const ExperimentConfig cfg = resolve(o);
  Lab lab(cache_of(o));
  const AblationAxis a = parse_axis(axis);
  const auto pts = ablate(lab, cfg, a, parse_grid(grid));
  fs::create_directories(cfg.out);
  write_ablation_csv(cfg.out / ("ablation_" + axis + ".csv"), a, pts);
  for (const auto &p : pts) {
    std::printf("%s=%-8g ", axis.c_str(), p.value);
    print_summary(p.summary);
  }
  return 0;
}

int cmd_timing(const Overrides &o) {
  Overrides t = o;
  if (!t.strategy)
    t.strategy = "hybrid";
  if (!t.M)
    t.M = 10;
  const ExperimentConfig cfg = resolve(t);
  Lab lab(cache_of(o));
  const CaseResult res = run_case(lab, cfg);
  const TimingReport rep = timing_report(res.online);
  print_timing(rep);
  std::ofstream(cfg.out / "timing.json") << rep.to_json().dump(2) << '\n';
  return 0;
}

int cmd_report(const std::string &dir) {
  std::printf("%-40s %-28s %8s %8s %8s %8s %14s\n", "run", "label", "bounded", "tracks",
              "diverged", "decay", "mean e");
  std::vector<fs::path> files;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.path().filename() == "summary.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto &p : files) {
    json j;
    std::ifstream(p) >> j;
    const json &s = j["summary"];
    const json &f = s["flags"];
    const double e = s["mean_field_error"].is_null() ? INFINITY : s["mean_field_error"].get<double>();
    std::printf("%-40s %-28s %8d %8d %8d %8d %14.6g\n",
                fs::relative(p.parent_path(), dir).c_str(),
                s["label"].get<std::string>().c_str(), f["bounded_energy"].get<bool>(),
                f["tracks_envelope"].get<bool>(), f["diverged"].get<bool>(),
                f["decay"].get<bool>(), e);
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Adaptive non-intrusive reduced-order models of a forced lid-driven cavity"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON configuration file");
  app.add_option("--case", o.case_id, "case 1, 2 or 3")->check(CLI::Range(1, 3));
  app.add_option("--model", o.model, "static model kind: galerkin, opinf, nitrom");
  app.add_option("--strategy", o.strategy,
                 "static, adaptive-opinf, adaptive-nitrom or hybrid");
  app.add_option("--Z", o.Z, "steps between adaptations");
  app.add_option("--M", o.M, "lookback window size");
  app.add_option("--K", o.K, "optimization iterations per adaptation");
  app.add_option("--r", o.r, "reduced dimension");
  app.add_option("--lambda", o.lambda, "ridge weight (default: scaled to the data)");
  app.add_option("--basis", o.basis, "windowed-svd or isvd");
  app.add_option("--seed", o.seed, "recorded with the outputs");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--offline-K", o.offline_K, "static NiTROM iterations");
  app.add_option("--record-every", o.record_every, "metric sampling stride in steps");
  app.add_flag("--linear-only", o.linear_only, "drop the quadratic operator");
  app.add_option("--cache", o.cache, "cache directory (default: $ADROM_CACHE_DIR)");

  auto *steady = app.add_subcommand("steady", "compute or load the steady base flow");
  double horizon = 20.0;
  auto *fomrun = app.add_subcommand("fom-run", "forced reference run and its energy history");
  fomrun->add_option("--horizon", horizon, "final time");
  auto *train = app.add_subcommand("train-static", "train a static model on a case");
  auto *run = app.add_subcommand("run-case", "train and run one online experiment");
  std::string axis = "Z", grid = "5,10,25,50";
  auto *abl = app.add_subcommand("ablate", "sweep one adaptation parameter");
  abl->add_option("--axis", axis, "Z, M, K or basis");
  abl->add_option("--grid", grid, "comma-separated values");
  auto *timing = app.add_subcommand("timing", "per-operation wall-clock averages");
  std::string report_dir = "out";
  auto *report = app.add_subcommand("report", "flag table of every summary.json below a directory");
  report->add_option("dir", report_dir, "results directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (steady->parsed())
      return cmd_steady(o);
    if (fomrun->parsed())
      return cmd_fom_run(o, horizon);
    if (train->parsed())
      return cmd_train(o);
    if (run->parsed())
      return cmd_run_case(o);
    if (abl->parsed())
      return cmd_ablate(o, axis, grid);
    if (timing->parsed())
      return cmd_timing(o);
    if (report->parsed())
      return cmd_report(report_dir);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
