#pragma once

// Matrix-free elliptic solves on the MAC grid: the cell-centered Neumann
// Laplacian (pressure potential, implicit scalar diffusion) and the
// face-centered Dirichlet Laplacian (implicit viscous step).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cstk/grid.hpp"
#include "cstk/linear_solvers.hpp"
#include "cstk/spectral.hpp"

namespace cstk {

/// Default CG cap: 10 * N^(1/d) * d for N cells in d dimensions.
inline int default_iteration_cap(const Grid& g) {
  const double per_axis = std::pow(static_cast<double>(g.cell_count()), 1.0 / g.ndim());
  return static_cast<int>(std::ceil(10.0 * per_axis * g.ndim()));
}

/// Preconditioner of the Neumann CG solves: the operator diagonal, or the
/// exact cosine-transform inverse of the constant-coefficient operator.
enum class Preconditioner { jacobi, cosine };

namespace detail {

inline std::size_t flat_cell(const Grid& g, int i, int j, int k) {
  return (static_cast<std::size_t>(k) * g.n(1) + j) * g.n(0) + i;
}

inline std::vector<double> flatten(const ScalarField& f) { return f.interior(); }

inline ScalarField unflatten(const Grid& g, std::span<const double> v) {
  ScalarField f(g);
  std::size_t p = 0;
  for_each_cell(g, [&](int i, int j, int k) { f(i, j, k) = v[p++]; });
  f.fill_ghosts();
  return f;
}

/// y = shift * x + scale * (-Laplacian_N) x over interior cells.
class NeumannOperator {
 public:
  NeumannOperator(const Grid& g, double shift, double scale)
      : g_(g), shift_(shift), scale_(scale) {
    for (int a = 0; a < 3; ++a) inv_h2_[a] = g.active(a) ? 1.0 / (g.h(a) * g.h(a)) : 0.0;
    stride_ = {1, static_cast<std::size_t>(g.n(0)),
               static_cast<std::size_t>(g.n(0)) * g.n(1)};
  }

  void operator()(std::span<const double> x, std::span<double> y) const {
    const std::size_t total = x.size();
    for (std::size_t p = 0; p < total; ++p) y[p] = shift_ * x[p];
    for (int a = 0; a < g_.ndim(); ++a) {
      const double c = scale_ * inv_h2_[a];
      const std::size_t s = stride_[a], block = s * g_.n(a), pairs = s * (g_.n(a) - 1);
      for (std::size_t b = 0; b < total; b += block) {
        const double* xb = x.data() + b;
        double* yb = y.data() + b;
        for (std::size_t q = 0; q < pairs; ++q) {
          const double d = c * (xb[q] - xb[q + s]);
          yb[q] += d;
          yb[q + s] -= d;
        }
      }
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(g_.cell_count());
    std::size_t p = 0;
    for_each_cell(g_, [&](int i, int j, int k) {
      const int idx[3] = {i, j, k};
      double s = 0.0;
      for (int a = 0; a < g_.ndim(); ++a) {
        if (idx[a] > 0) s += inv_h2_[a];
        if (idx[a] < g_.n(a) - 1) s += inv_h2_[a];
      }
      d[p++] = shift_ + scale_ * s;
    });
    return d;
  }

 private:
  const Grid& g_;
  double shift_, scale_;
  double inv_h2_[3];
  std::array<std::size_t, 3> stride_;
};

/// y = x + dt * (-Laplacian_D) x for one velocity component. Boundary faces
/// along the component's own axis are identity rows pinned to zero; walls
/// parallel to it use the odd ghost u_ghost = -u.
class ViscousOperator {
 public:
  ViscousOperator(const Grid& g, int comp, double dt) : g_(g), comp_(comp), dt_(dt) {
    for (int a = 0; a < 3; ++a) {
      ext_[a] = g.face_extent(comp, a);
      inv_h2_[a] = g.active(a) ? 1.0 / (g.h(a) * g.h(a)) : 0.0;
    }
    stride_ = {1, static_cast<std::size_t>(ext_[0]),
               static_cast<std::size_t>(ext_[0]) * ext_[1]};
  }

  std::size_t size() const {
    return static_cast<std::size_t>(ext_[0]) * ext_[1] * ext_[2];
  }

  bool pinned(const int idx[3]) const {
    return idx[comp_] == 0 || idx[comp_] == g_.n(comp_);
  }

  void operator()(std::span<const double> x, std::span<double> y) const {
    const std::size_t total = x.size();
    for (std::size_t p = 0; p < total; ++p) y[p] = x[p];
    for (int a = 0; a < g_.ndim(); ++a) {
      const double c = dt_ * inv_h2_[a];
      const std::size_t s = stride_[a], len = ext_[a], block = s * len;
      for (std::size_t b = 0; b < total; b += block) {
        const double* xb = x.data() + b;
        double* yb = y.data() + b;
        if (a == comp_) {
          // rows 1..n-1; pinned neighbours contribute 0
          for (std::size_t r = 1; r + 1 < len; ++r) {
            const double* xr = xb + r * s;
            double* yr = yb + r * s;
            const bool lo = r > 1, hi = r + 2 < len;
            for (std::size_t q = 0; q < s; ++q)
              yr[q] += c * (2.0 * xr[q] - (lo ? xr[q - s] : 0.0) - (hi ? xr[q + s] : 0.0));
          }
        } else {
          for (std::size_t q = 0; q + s < block; ++q) {
            const double d = c * (xb[q] - xb[q + s]);
            yb[q] += d;
            yb[q + s] -= d;
          }
          // odd ghost at both walls
          for (std::size_t q = 0; q < s; ++q) {
            yb[q] += 2.0 * c * xb[q];
            yb[block - s + q] += 2.0 * c * xb[block - s + q];
          }
        }
      }
    }
    const std::size_t s = stride_[comp_], block = s * ext_[comp_];
    for (std::size_t b = 0; b < total; b += block)
      for (std::size_t q = 0; q < s; ++q) {
        y[b + q] = x[b + q];
        y[b + block - s + q] = x[b + block - s + q];
      }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(size());
    std::size_t p = 0;
    for (int k = 0; k < ext_[2]; ++k)
      for (int j = 0; j < ext_[1]; ++j)
        for (int i = 0; i < ext_[0]; ++i, ++p) {
          const int idx[3] = {i, j, k};
          if (pinned(idx)) {
            d[p] = 1.0;
            continue;
          }
          double s = 0.0;
          for (int a = 0; a < g_.ndim(); ++a) {
            s += 2.0 * inv_h2_[a];
            if (a != comp_) {
              if (idx[a] == 0) s += inv_h2_[a];
              if (idx[a] == ext_[a] - 1) s += inv_h2_[a];
            }
          }
          d[p] = 1.0 + dt_ * s;
        }
    return d;
  }

 private:
  const Grid& g_;
  int comp_;
  double dt_;
  int ext_[3];
  double inv_h2_[3];
  std::array<std::size_t, 3> stride_;
};

}  // namespace detail

/// Solves Laplacian_N q = rhs (rhs mean removed), returns mean-zero q.
/// `guess` seeds the iteration and receives the solution when non-empty.
inline ScalarField solve_neumann_poisson(const ScalarField& rhs, double abs_tol,
                                         int max_iterations, std::vector<double>* guess = nullptr,
                                         SolveStats* stats = nullptr,
                                         Preconditioner pc = Preconditioner::cosine) {
  const Grid& g = rhs.grid();
  detail::NeumannOperator op(g, 0.0, 1.0);  // -Laplacian
  std::vector<double> b = detail::flatten(rhs);
  for (double& v : b) v = -v;
  std::vector<double> x(g.cell_count(), 0.0);
  if (guess && guess->size() == x.size()) x = *guess;
  SolveStats st;
  if (pc == Preconditioner::cosine) {
    auto& tr = detail::cosine_transform(g);
    auto inv = [&tr](std::span<const double> r, std::span<double> z) { tr.solve(r, z, 0.0, 1.0); };
    st = pcg(op, inv, b, x, abs_tol, max_iterations, true, "poisson");
  } else {
    const auto diag = op.diagonal();
    st = pcg(op, detail::jacobi(diag), b, x, abs_tol, max_iterations, true, "poisson");
  }
  detail::remove_mean(x);
  if (guess) *guess = x;
  if (stats) *stats = st;
  return detail::unflatten(g, x);
}

/// Implicit Neumann diffusion: solves (I - dt Laplacian_N) out = rhs.
inline ScalarField solve_implicit_diffusion(const ScalarField& rhs, double dt,
                                            double rel_tol, int max_iterations,
                                            SolveStats* stats = nullptr,
                                            Preconditioner pc = Preconditioner::cosine) {
  const Grid& g = rhs.grid();
  detail::NeumannOperator op(g, 1.0, dt);
  const std::vector<double> b = detail::flatten(rhs);
  std::vector<double> x = b;
  const double tol = rel_tol * std::max(detail::norm_inf(b), 1e-300);
  SolveStats st;
  if (pc == Preconditioner::cosine) {
    auto& tr = detail::cosine_transform(g);
    auto inv = [&tr, dt](std::span<const double> r, std::span<double> z) { tr.solve(r, z, 1.0, dt); };
    st = pcg(op, inv, b, x, tol, max_iterations, false, "diffusion");
  } else {
    const auto diag = op.diagonal();
    st = pcg(op, detail::jacobi(diag), b, x, tol, max_iterations, false, "diffusion");
  }
  if (stats) *stats = st;
  return detail::unflatten(g, x);
}

/// Implicit viscous step: (I - dt Laplacian_D) out = rhs per component,
/// boundary-normal faces pinned to zero.
inline VectorField solve_viscous(const VectorField& rhs, double dt, double rel_tol,
                                 int max_iterations, SolveStats* stats = nullptr,
                                 Preconditioner pc = Preconditioner::cosine) {
  const Grid& g = rhs.grid();
  VectorField out(g);
  SolveStats total;
  for (int c = 0; c < g.ndim(); ++c) {
    detail::ViscousOperator op(g, c, dt);
    std::vector<double> b(rhs.component(c).begin(), rhs.component(c).end());
    // pinned rows
    rhs.for_each_face(c, [&](int i, int j, int k) {
      if (VectorField::is_boundary_face(g, c, i, j, k)) b[rhs.index(c, i, j, k)] = 0.0;
    });
    std::vector<double> x = b;
    const double tol = rel_tol * std::max(detail::norm_inf(b), 1e-300);
    SolveStats st;
    if (pc == Preconditioner::cosine) {
      auto& tr = detail::sine_transform(g, c);
      std::vector<double> inner_r(tr.size()), inner_z(tr.size());
      const int ext[3] = {g.face_extent(c, 0), g.face_extent(c, 1), g.face_extent(c, 2)};
      // visits the unpinned faces in storage order
      auto each_free = [&](auto&& fn) {
        std::size_t p = 0, q = 0;
        for (int k = 0; k < ext[2]; ++k)
          for (int j = 0; j < ext[1]; ++j)
            for (int i = 0; i < ext[0]; ++i, ++p) {
              const int own = c == 0 ? i : c == 1 ? j : k;
              fn(p, own == 0 || own == g.n(c) ? SIZE_MAX : q++);
            }
      };
      auto inv = [&](std::span<const double> r, std::span<double> z) {
        each_free([&](std::size_t p, std::size_t q) {
          if (q != SIZE_MAX) inner_r[q] = r[p];
        });
        tr.solve(inner_r, inner_z, 1.0, dt);
        each_free([&](std::size_t p, std::size_t q) { z[p] = q == SIZE_MAX ? r[p] : inner_z[q]; });
      };
      st = pcg(op, inv, b, x, tol, max_iterations, false, "viscous");
    } else {
      const auto diag = op.diagonal();
      st = pcg(op, detail::jacobi(diag), b, x, tol, max_iterations, false, "viscous");
    }
    total.iterations += st.iterations;
    total.residual_inf = std::max(total.residual_inf, st.residual_inf);
    std::copy(x.begin(), x.end(), out.component(c).begin());
  }
  if (stats) *stats = total;
  return out;
}

/// Dirichlet vector Laplacian matching solve_viscous (pinned faces give 0).
inline VectorField vector_laplacian(const VectorField& u) {
  const Grid& g = u.grid();
  VectorField out(g);
  for (int c = 0; c < g.ndim(); ++c) {
    // (I - 1 * Lap) x - x = -Lap x
    detail::ViscousOperator op(g, c, 1.0);
    std::vector<double> y(op.size());
    op(u.component(c), y);
    auto dst = out.component(c);
    const auto src = u.component(c);
    for (std::size_t p = 0; p < y.size(); ++p) dst[p] = src[p] - y[p];
    out.for_each_face(c, [&](int i, int j, int k) {
      if (VectorField::is_boundary_face(g, c, i, j, k)) out(c, i, j, k) = 0.0;
    });
  }
  return out;
}

}  // namespace cstk
