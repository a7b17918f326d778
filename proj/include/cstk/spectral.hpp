#pragma once

// Exact inverses of the constant-coefficient operators shift - scale*Laplacian
// on a uniform box, by separable real transforms (FFTW r2r): cosine for the
// cell-centered Neumann operator, sine for the no-slip face operator of one
// velocity component. Used as CG preconditioners.

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "cstk/grid.hpp"

namespace cstk::detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct TransformAxis {
  int n = 1;
  fftw_r2r_kind forward = FFTW_REDFT10, backward = FFTW_REDFT01;
  std::vector<double> eig;  // -Laplacian eigenvalue per mode
  double norm = 1.0;        // forward then backward scales by this
};

class SeparableInverse {
 public:
  /// axes[0] is the fastest-varying index.
  SeparableInverse(std::vector<TransformAxis> axes) : axes_(std::move(axes)) {
    const int nd = static_cast<int>(axes_.size());
    std::size_t total = 1;
    int n[3];
    fftw_r2r_kind fwd[3], bwd[3];
    for (int a = 0; a < nd; ++a) {
      total *= axes_[a].n;
      // FFTW is row-major: slowest axis first
      n[a] = axes_[nd - 1 - a].n;
      fwd[a] = axes_[nd - 1 - a].forward;
      bwd[a] = axes_[nd - 1 - a].backward;
      norm_ *= axes_[a].norm;
    }
    size_ = total;
    buf_ = static_cast<double*>(fftw_malloc(sizeof(double) * total));
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_r2r(nd, n, buf_, buf_, fwd, FFTW_ESTIMATE);
    backward_ = fftw_plan_r2r(nd, n, buf_, buf_, bwd, FFTW_ESTIMATE);
  }
  SeparableInverse(const SeparableInverse&) = delete;
  SeparableInverse& operator=(const SeparableInverse&) = delete;
  ~SeparableInverse() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buf_);
  }

  std::size_t size() const { return size_; }

  /// z = (shift + scale*(-Laplacian))^-1 r; zero-eigenvalue modes are dropped.
  void solve(std::span<const double> r, std::span<double> z, double shift, double scale) {
    std::copy(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(size_), buf_);
    fftw_execute(forward_);
    const int n0 = axes_[0].n, n1 = axes_[1].n, n2 = axes_.size() > 2 ? axes_[2].n : 1;
    const double* e2 = axes_.size() > 2 ? axes_[2].eig.data() : nullptr;
    std::size_t p = 0;
    for (int k = 0; k < n2; ++k)
      for (int j = 0; j < n1; ++j) {
        const double base = axes_[1].eig[j] + (e2 ? e2[k] : 0.0);
        for (int i = 0; i < n0; ++i, ++p) {
          const double lam = shift + scale * (axes_[0].eig[i] + base);
          buf_[p] = lam > 0.0 ? buf_[p] / (lam * norm_) : 0.0;
        }
      }
    fftw_execute(backward_);
    std::copy(buf_, buf_ + size_, z.begin());
  }

 private:
  std::vector<TransformAxis> axes_;
  std::size_t size_ = 0;
  double norm_ = 1.0;
  double* buf_ = nullptr;
  fftw_plan forward_ = nullptr, backward_ = nullptr;
};

/// Modes of the three-point stencil: 4 sin^2(pi k / (2 n)) / h^2, k = first..first+count-1.
inline std::vector<double> stencil_modes(int n, int first, int count, double h) {
  std::vector<double> e(count);
  for (int k = 0; k < count; ++k) {
    const double s = std::sin(std::numbers::pi * (first + k) / (2.0 * n));
    e[k] = 4.0 * s * s / (h * h);
  }
  return e;
}

inline SeparableInverse& cached_inverse(const Grid& g, int kind, std::vector<TransformAxis> (*make)(const Grid&, int)) {
  using Key = std::tuple<std::array<int, 3>, std::array<double, 3>, int>;
  thread_local std::map<Key, std::unique_ptr<SeparableInverse>> cache;
  auto& slot = cache[Key{g.dims(), g.spacing(), kind}];
  if (!slot) slot = std::make_unique<SeparableInverse>(make(g, kind));
  return *slot;
}

/// Cell-centered Neumann operator: cosine (DCT-II / DCT-III) on every axis.
inline SeparableInverse& cosine_transform(const Grid& g) {
  return cached_inverse(g, -1, [](const Grid& grid, int) {
    std::vector<TransformAxis> axes(grid.ndim());
    for (int a = 0; a < grid.ndim(); ++a) {
      const int n = grid.n(a);
      axes[a] = {n, FFTW_REDFT10, FFTW_REDFT01, stencil_modes(n, 0, n, grid.h(a)), 2.0 * n};
    }
    return axes;
  });
}

/// No-slip operator of velocity component `comp` restricted to its unpinned
/// faces (own-axis index 1..n-1): DST-I along the own axis, DST-II / DST-III
/// across the walls parallel to it.
inline SeparableInverse& sine_transform(const Grid& g, int comp) {
  return cached_inverse(g, comp, [](const Grid& grid, int c) {
    std::vector<TransformAxis> axes(grid.ndim());
    for (int a = 0; a < grid.ndim(); ++a) {
      const int n = grid.n(a);
      if (a == c)
        axes[a] = {n - 1, FFTW_RODFT00, FFTW_RODFT00, stencil_modes(n, 1, n - 1, grid.h(a)), 2.0 * n};
      else
        axes[a] = {n, FFTW_RODFT10, FFTW_RODFT01, stencil_modes(n, 1, n, grid.h(a)), 2.0 * n};
    }
    return axes;
  });
}

}  // namespace cstk::detail
