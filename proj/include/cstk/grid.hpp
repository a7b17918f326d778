#pragma once

// Uniform Cartesian box with a MAC layout: scalars live at cell centers
// (stored with one ghost layer), velocity components live on the faces
// normal to their own axis. 2D grids keep a unit third extent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cstk/errors.hpp"

namespace cstk {

inline constexpr int kMaxDim = 3;

class Grid {
 public:
  Grid() = default;

  /// Box [origin, origin + lengths] split into dims cells per axis.
  Grid(std::span<const int> dims, std::span<const double> lengths)
      : ndim_(static_cast<int>(dims.size())) {
    if (ndim_ < 2 || ndim_ > 3)
      throw InvalidArgument("grid: 2 or 3 axes required, got " +
                            std::to_string(dims.size()));
    if (lengths.size() != dims.size())
      throw InvalidArgument("grid: dims and lengths differ in size");
    for (int a = 0; a < kMaxDim; ++a) {
      if (a < ndim_) {
        if (dims[a] < 4)
          throw InvalidArgument("grid: extent along axis " +
                                std::to_string(a) + " must be >= 4 cells");
        if (!std::isfinite(lengths[a]) || !(lengths[a] > 0.0))
          throw InvalidArgument("grid: lengths must be finite and > 0");
        n_[a] = dims[a];
        h_[a] = lengths[a] / dims[a];
      } else {
        n_[a] = 1;
        h_[a] = 1.0;
      }
    }
  }

  Grid(std::initializer_list<int> dims, std::initializer_list<double> lengths)
      : Grid(std::span<const int>(dims.begin(), dims.size()),
             std::span<const double>(lengths.begin(), lengths.size())) {}

  /// Grid with the given cell widths (exact, no division round-off).
  static Grid from_spacing(std::span<const int> dims, std::span<const double> spacing) {
    std::vector<double> lengths(dims.size());
    for (std::size_t a = 0; a < dims.size() && a < spacing.size(); ++a)
      lengths[a] = dims[a] * spacing[a];
    Grid g(dims, std::span<const double>(lengths.data(), std::min(lengths.size(), spacing.size())));
    for (std::size_t a = 0; a < dims.size(); ++a) g.h_[a] = spacing[a];
    return g;
  }

  int ndim() const { return ndim_; }
  int n(int axis) const { return n_[axis]; }
  double h(int axis) const { return h_[axis]; }
  const std::array<int, 3>& dims() const { return n_; }
  const std::array<double, 3>& spacing() const { return h_; }
  double length(int axis) const { return n_[axis] * h_[axis]; }
  bool active(int axis) const { return axis < ndim_; }

  double min_spacing() const {
    double m = h_[0];
    for (int a = 1; a < ndim_; ++a) m = std::min(m, h_[a]);
    return m;
  }

  std::size_t cell_count() const {
    return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
  }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < ndim_; ++a) v *= h_[a];
    return v;
  }
  double volume() const { return cell_volume() * cell_count(); }

  /// Cell center coordinate along an axis (origin at 0).
  double center(int axis, int i) const { return (i + 0.5) * h_[axis]; }
  /// Coordinate of face i (between cells i-1 and i).
  double face(int axis, int i) const { return i * h_[axis]; }

  /// Extent of the face array for velocity component `comp` along `axis`.
  int face_extent(int comp, int axis) const {
    return n_[axis] + (comp == axis ? 1 : 0);
  }

  bool operator==(const Grid& o) const {
    return ndim_ == o.ndim_ && n_ == o.n_ && h_ == o.h_;
  }

 private:
  int ndim_ = 0;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> h_{1.0, 1.0, 1.0};
};

/// Calls f(i, j, k) for every interior cell, x fastest.
template <class F>
inline void for_each_cell(const Grid& g, F&& f) {
  for (int k = 0; k < g.n(2); ++k)
    for (int j = 0; j < g.n(1); ++j)
      for (int i = 0; i < g.n(0); ++i) f(i, j, k);
}

/// Cell-centered scalar with a depth-1 ghost layer on every active axis.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& g, double value = 0.0) : grid_(g) {
    if (!std::isfinite(value))
      throw InvalidArgument("scalar field: non-finite fill value");
    for (int a = 0; a < kMaxDim; ++a) {
      off_[a] = g.active(a) ? 1 : 0;
      ext_[a] = g.n(a) + 2 * off_[a];
    }
    data_.assign(static_cast<std::size_t>(ext_[0]) * ext_[1] * ext_[2], value);
  }

  /// Builds a field from interior values (x fastest); ghosts get Neumann fill.
  static ScalarField from_interior(const Grid& g, std::span<const double> v) {
    if (v.size() != g.cell_count())
      throw InvalidArgument("scalar field: expected " +
                            std::to_string(g.cell_count()) + " values");
    ScalarField f(g);
    std::size_t p = 0;
    for_each_cell(g, [&](int i, int j, int k) {
      if (!std::isfinite(v[p])) throw InvalidArgument("scalar field: non-finite value");
      f(i, j, k) = v[p++];
    });
    f.fill_ghosts();
    return f;
  }

  /// Samples fn(x, y, z) at cell centers.
  template <class Fn>
  static ScalarField sample(const Grid& g, Fn&& fn) {
    ScalarField f(g);
    for_each_cell(g, [&](int i, int j, int k) {
      const double v = fn(g.center(0, i), g.active(1) ? g.center(1, j) : 0.0,
                          g.active(2) ? g.center(2, k) : 0.0);
      if (!std::isfinite(v)) throw InvalidArgument("scalar field: non-finite sample");
      f(i, j, k) = v;
    });
    f.fill_ghosts();
    return f;
  }

  const Grid& grid() const { return grid_; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k + off_[2]) * ext_[1] + (j + off_[1])) *
               ext_[0] +
           (i + off_[0]);
  }
  double& operator()(int i, int j, int k = 0) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k = 0) const { return data_[index(i, j, k)]; }

  /// Stride in the padded array for a unit step along an axis.
  std::ptrdiff_t stride(int axis) const {
    if (axis == 0) return 1;
    if (axis == 1) return ext_[0];
    return static_cast<std::ptrdiff_t>(ext_[0]) * ext_[1];
  }
  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

  /// Even reflection across every wall (homogeneous Neumann).
  void fill_ghosts() {
    const Grid& g = grid_;
    for (int a = 0; a < g.ndim(); ++a) {
      const std::ptrdiff_t s = stride(a);
      // Iterate the full padded extent of the other axes so edges and
      // corners are filled after all axes have been processed.
      std::array<int, 3> lo{}, hi{};
      for (int b = 0; b < kMaxDim; ++b) {
        lo[b] = -off_[b];
        hi[b] = g.n(b) + off_[b];
      }
      lo[a] = 0;
      hi[a] = 1;
      for (int k = lo[2]; k < hi[2]; ++k)
        for (int j = lo[1]; j < hi[1]; ++j)
          for (int i = lo[0]; i < hi[0]; ++i) {
            std::array<int, 3> first{i, j, k};
            first[a] = 0;
            const std::size_t p0 = index(first[0], first[1], first[2]);
            data_[p0 - s] = data_[p0];
            std::array<int, 3> last = first;
            last[a] = g.n(a) - 1;
            const std::size_t p1 = index(last[0], last[1], last[2]);
            data_[p1 + s] = data_[p1];
          }
    }
  }

  std::vector<double> interior() const {
    std::vector<double> v;
    v.reserve(grid_.cell_count());
    for_each_cell(grid_, [&](int i, int j, int k) { v.push_back((*this)(i, j, k)); });
    return v;
  }

  double max() const {
    double m = -HUGE_VAL;
    for_each_cell(grid_, [&](int i, int j, int k) { m = std::max(m, (*this)(i, j, k)); });
    return m;
  }
  double min() const {
    double m = HUGE_VAL;
    for_each_cell(grid_, [&](int i, int j, int k) { m = std::min(m, (*this)(i, j, k)); });
    return m;
  }
  double max_abs() const {
    double m = 0.0;
    for_each_cell(grid_, [&](int i, int j, int k) { m = std::max(m, std::abs((*this)(i, j, k))); });
    return m;
  }
  bool all_finite() const {
    bool ok = true;
    for_each_cell(grid_, [&](int i, int j, int k) { ok = ok && std::isfinite((*this)(i, j, k)); });
    return ok;
  }

  /// Pointwise map over interior cells, ghosts refilled.
  template <class Fn>
  ScalarField map(Fn&& fn) const {
    ScalarField out(grid_);
    for_each_cell(grid_, [&](int i, int j, int k) { out(i, j, k) = fn((*this)(i, j, k)); });
    out.fill_ghosts();
    return out;
  }

  bool operator==(const ScalarField& o) const {
    return grid_ == o.grid_ && data_ == o.data_;
  }

 private:
  Grid grid_;
  std::array<int, 3> off_{0, 0, 0};
  std::array<int, 3> ext_{1, 1, 1};
  std::vector<double> data_;
};

/// Face-centered vector field; component a has n_a + 1 entries along axis a.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& g) : grid_(g) {
    for (int c = 0; c < g.ndim(); ++c) {
      std::size_t size = 1;
      for (int a = 0; a < kMaxDim; ++a) size *= g.face_extent(c, a);
      comp_[c].assign(size, 0.0);
    }
  }

  template <class Fn>
  static VectorField sample(const Grid& g, Fn&& fn) {
    VectorField v(g);
    for (int c = 0; c < g.ndim(); ++c)
      v.for_each_face(c, [&](int i, int j, int k) {
        std::array<double, 3> x{};
        const std::array<int, 3> idx{i, j, k};
        for (int a = 0; a < g.ndim(); ++a)
          x[a] = a == c ? g.face(a, idx[a]) : g.center(a, idx[a]);
        const double val = fn(c, x[0], x[1], x[2]);
        if (!std::isfinite(val)) throw InvalidArgument("vector field: non-finite sample");
        v(c, i, j, k) = val;
      });
    return v;
  }

  const Grid& grid() const { return grid_; }

  int extent(int comp, int axis) const { return grid_.face_extent(comp, axis); }
  std::size_t index(int comp, int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * extent(comp, 1) + j) * extent(comp, 0) + i;
  }
  double& operator()(int comp, int i, int j, int k = 0) {
    return comp_[comp][index(comp, i, j, k)];
  }
  double operator()(int comp, int i, int j, int k = 0) const {
    return comp_[comp][index(comp, i, j, k)];
  }
  std::span<double> component(int c) { return comp_[c]; }
  std::span<const double> component(int c) const { return comp_[c]; }

  template <class F>
  void for_each_face(int comp, F&& f) const {
    for (int k = 0; k < extent(comp, 2); ++k)
      for (int j = 0; j < extent(comp, 1); ++j)
        for (int i = 0; i < extent(comp, 0); ++i) f(i, j, k);
  }

  static bool is_boundary_face(const Grid& g, int comp, int i, int j, int k) {
    const std::array<int, 3> idx{i, j, k};
    return idx[comp] == 0 || idx[comp] == g.n(comp);
  }

  void zero_boundary() {
    for (int c = 0; c < grid_.ndim(); ++c)
      for_each_face(c, [&](int i, int j, int k) {
        if (is_boundary_face(grid_, c, i, j, k)) (*this)(c, i, j, k) = 0.0;
      });
  }

  double max_abs() const {
    double m = 0.0;
    for (int c = 0; c < grid_.ndim(); ++c)
      for (double v : comp_[c]) m = std::max(m, std::abs(v));
    return m;
  }
  bool all_finite() const {
    for (int c = 0; c < grid_.ndim(); ++c)
      for (double v : comp_[c])
        if (!std::isfinite(v)) return false;
    return true;
  }

  VectorField& operator+=(const VectorField& o) {
    for (int c = 0; c < grid_.ndim(); ++c)
      for (std::size_t p = 0; p < comp_[c].size(); ++p) comp_[c][p] += o.comp_[c][p];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int c = 0; c < grid_.ndim(); ++c)
      for (std::size_t p = 0; p < comp_[c].size(); ++p) comp_[c][p] -= o.comp_[c][p];
    return *this;
  }
  VectorField& operator*=(double s) {
    for (int c = 0; c < grid_.ndim(); ++c)
      for (double& v : comp_[c]) v *= s;
    return *this;
  }

  bool operator==(const VectorField& o) const {
    return grid_ == o.grid_ && comp_ == o.comp_;
  }

 private:
  Grid grid_;
  std::array<std::vector<double>, 3> comp_;
};

/// Midpoint-rule integral over the box: sum of interior values times cell volume.
inline double integrate(const ScalarField& f) {
  const Grid& g = f.grid();
  double s = 0.0;
  for_each_cell(g, [&](int i, int j, int k) { s += f(i, j, k); });
  return s * g.cell_volume();
}

/// Returns f with its ghost layer filled by even reflection. Interior untouched.
inline ScalarField apply_scalar_bc(ScalarField f) {
  f.fill_ghosts();
  return f;
}

/// Quadrature weight of a face relative to the cell volume: boundary faces
/// carry half weight (trapezoid rule along the component's own axis).
inline double face_weight(const Grid& g, int comp, int i, int j, int k) {
  return VectorField::is_boundary_face(g, comp, i, j, k) ? 0.5 : 1.0;
}

/// Discrete face inner product with trapezoid weights along each component axis.
inline double inner(const VectorField& a, const VectorField& b) {
  const Grid& g = a.grid();
  double s = 0.0;
  for (int c = 0; c < g.ndim(); ++c)
    a.for_each_face(c, [&](int i, int j, int k) {
      s += face_weight(g, c, i, j, k) * a(c, i, j, k) * b(c, i, j, k);
    });
  return s * g.cell_volume();
}

inline double inner(const ScalarField& a, const ScalarField& b) {
  const Grid& g = a.grid();
  double s = 0.0;
  for_each_cell(g, [&](int i, int j, int k) { s += a(i, j, k) * b(i, j, k); });
  return s * g.cell_volume();
}

}  // namespace cstk
