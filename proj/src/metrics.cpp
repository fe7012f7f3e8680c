#include "adrom/metrics.hpp"

#include "adrom/csv.hpp"
#include "adrom/kernels.hpp"

#include <cmath>
#include <fstream>

namespace adrom::metrics {

double energy(const Vec &v) { return v.squaredNorm(); }

double field_error(const Vec &v_fom, const Vec &v_rom) {
  require(v_fom.size() == v_rom.size(), "field_error: length mismatch");
  return (v_fom - v_rom).norm();
}

int slice_row(const Grid &g, double y) {
  int best = 0;
  double best_d = std::abs(g.u_y(0) - y);
  for (int j = 1; j < g.ny; ++j) {
    const double d = std::abs(g.u_y(j) - y);
    // Strict comparison with a relative slack keeps ties on the lower row.
    if (d < best_d * (1.0 - 1e-9)) {
      best = j;
      best_d = d;
    }
  }
  return best;
}

Slice u_slice(const Vec &v, const Grid &g, double y) {
  require(static_cast<std::size_t>(v.size()) == g.size(), "u_slice: size mismatch");
  Slice s;
  s.row = slice_row(g, y);
  s.y = g.u_y(s.row);
  s.x.resize(g.nx);
  s.u.resize(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    s.x[i] = g.u_x(i);
    s.u[i] = v[static_cast<Eigen::Index>(g.u_index(i, s.row))];
  }
  return s;
}

Vec vorticity(const Vec &v, const Grid &g, double lid) {
  require(static_cast<std::size_t>(v.size()) == g.size(), "vorticity: size mismatch");
  kernels::PaddedVelocity pv(g);
  pv.fill({v.data(), g.size()}, lid);
  Vec w(static_cast<Eigen::Index>(g.cells()));
  kernels::vorticity(g, pv, {w.data(), g.cells()});
  return w;
}

void MetricSeries::push(double t, double v) {
  times.push_back(t);
  values.push_back(v);
}

void MetricSeries::validate() const {
  require(times.size() == values.size(), "MetricSeries '" + label + "': length mismatch");
  for (double v : values)
    if (!std::isfinite(v))
      throw NumericalError("MetricSeries '" + label + "': non-finite value");
}

void write_csv(const std::filesystem::path &path,
               const std::vector<MetricSeries> &series) {
  require(!series.empty(), "write_csv: no series");
  const std::size_t len = series.front().times.size();
  for (const auto &s : series)
    require(s.times.size() == len && s.values.size() == len,
            "write_csv: series lengths differ");
  CsvWriter csv(path);
  std::vector<std::string> head{"t"};
  for (const auto &s : series)
    head.push_back(s.label);
  csv.header(head);
  for (std::size_t k = 0; k < len; ++k) {
    csv.field(series.front().times[k]);
    for (const auto &s : series)
      csv.field(s.values[k]);
    csv.end_row();
  }
}

double time_average(const MetricSeries &s, double t_lo, double t_hi) {
  double sum = 0.0;
  std::size_t cnt = 0;
  for (std::size_t k = 0; k < s.times.size(); ++k)
    if (s.times[k] > t_lo + 1e-9 && s.times[k] <= t_hi + 1e-9) {
      sum += s.values[k];
      ++cnt;
    }
  if (cnt == 0)
    throw PreconditionError("time_average: no samples in interval");
  return sum / static_cast<double>(cnt);
}

} // namespace adrom::metrics
