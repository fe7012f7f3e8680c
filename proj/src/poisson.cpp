#include "adrom/poisson.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

namespace adrom {
namespace {
// FFTW's planner is not thread-safe.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

struct NeumannPoisson::Impl {
  Grid g;
  double *work = nullptr;
  // Separable transforms: one batched 1-D plan along rows, one along columns.
  // Estimated (not measured) plans keep results bitwise reproducible.
  fftw_plan fwd_rows = nullptr, fwd_cols = nullptr;
  fftw_plan bwd_rows = nullptr, bwd_cols = nullptr;
  std::vector<double> inv_eig;

  explicit Impl(const Grid &grid) : g(grid) {
    const std::size_t n = g.cells();
    work = fftw_alloc_real(n);
    {
      std::lock_guard lock(planner_mutex());
      fwd_rows = plan(g.nx, g.ny, 1, g.nx, FFTW_REDFT10);
      fwd_cols = plan(g.ny, g.nx, g.nx, 1, FFTW_REDFT10);
      bwd_rows = plan(g.nx, g.ny, 1, g.nx, FFTW_REDFT01);
      bwd_cols = plan(g.ny, g.nx, g.nx, 1, FFTW_REDFT01);
    }
    if (!work || !fwd_rows || !fwd_cols || !bwd_rows || !bwd_cols)
      throw NumericalError("NeumannPoisson: FFTW plan creation failed");

    // Eigenvalues of the Neumann 5-point Laplacian, folded together with the
    // 1/(4 nx ny) normalization of the DCT-II/DCT-III pair.
    inv_eig.resize(n);
    const double norm = 1.0 / (4.0 * g.nx * g.ny);
    for (int l = 0; l < g.ny; ++l) {
      const double sy = std::sin(std::numbers::pi * l / (2.0 * g.ny));
      const double ly = -4.0 * sy * sy / (g.dy() * g.dy());
      for (int k = 0; k < g.nx; ++k) {
        const double sx = std::sin(std::numbers::pi * k / (2.0 * g.nx));
        const double lx = -4.0 * sx * sx / (g.dx() * g.dx());
        const double lam = lx + ly;
        inv_eig[l * g.nx + k] = (k == 0 && l == 0) ? 0.0 : norm / lam;
      }
    }
  }

  fftw_plan plan(int len, int howmany, int stride, int dist, fftw_r2r_kind kind) {
    return fftw_plan_many_r2r(1, &len, howmany, work, nullptr, stride, dist,
                              work, nullptr, stride, dist, &kind, FFTW_ESTIMATE);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {fwd_rows, fwd_cols, bwd_rows, bwd_cols})
      if (p)
        fftw_destroy_plan(p);
    if (work)
      fftw_free(work);
  }
};

NeumannPoisson::NeumannPoisson(const Grid &g) : impl_(std::make_unique<Impl>(g)) {}
NeumannPoisson::~NeumannPoisson() = default;
NeumannPoisson::NeumannPoisson(NeumannPoisson &&) noexcept = default;
NeumannPoisson &NeumannPoisson::operator=(NeumannPoisson &&) noexcept = default;

void NeumannPoisson::solve(std::span<const double> rhs, std::span<double> p) {
  const std::size_t n = impl_->g.cells();
  require(rhs.size() == n && p.size() == n, "NeumannPoisson: size mismatch");
  double *w = impl_->work;
  for (std::size_t k = 0; k < n; ++k)
    w[k] = rhs[k];
  fftw_execute(impl_->fwd_rows);
  fftw_execute(impl_->fwd_cols);
  for (std::size_t k = 0; k < n; ++k)
    w[k] *= impl_->inv_eig[k];
  fftw_execute(impl_->bwd_cols);
  fftw_execute(impl_->bwd_rows);
  for (std::size_t k = 0; k < n; ++k)
    p[k] = w[k];
}

} // namespace adrom
