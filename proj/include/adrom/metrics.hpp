#pragma once

#include "adrom/grid.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adrom::metrics {

/// Perturbation energy E = |v|^2 (uniform grid, no quadrature weights).
double energy(const Vec &v);

/// Absolute field error |v_fom - v_rom|.
double field_error(const Vec &v_fom, const Vec &v_rom);

struct Slice {
  int row = 0;      ///< u-face row index j
  double y = 0.0;   ///< its height
  Vec x;            ///< face abscissae
  Vec u;            ///< u-fluctuation along the row
};

/// Row of u-faces nearest to y = 0.05 (ties go to the lower row).
int slice_row(const Grid &g, double y = 0.05);
Slice u_slice(const Vec &v, const Grid &g, double y = 0.05);

/// Cell-centered vorticity of a fluctuation field (homogeneous walls), or of
/// a full field when `lid` is the lid speed.
Vec vorticity(const Vec &v, const Grid &g, double lid = 0.0);

struct MetricSeries {
  std::string label;
  std::vector<double> times;
  std::vector<double> values;

  void push(double t, double v);
  void validate() const;
};

/// Writes aligned series as columns: t,<label1>,<label2>,...
void write_csv(const std::filesystem::path &path,
               const std::vector<MetricSeries> &series);

/// Mean of `values` over samples with t in (t_lo, t_hi].
double time_average(const MetricSeries &s, double t_lo, double t_hi);

} // namespace adrom::metrics
