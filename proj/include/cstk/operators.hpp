#pragma once

// Discrete differential operators on the MAC grid. Every map is pure:
// inputs are read, a fresh field is returned.

#include <array>
#include <cmath>
#include <sstream>

#include "cstk/grid.hpp"

namespace cstk {

enum class MobilityMean { arithmetic, harmonic };

/// Parameters of the regularized porous-medium and chemotaxis fluxes.
struct FluxSpec {
  double m = 2.0;
  double chi = 1.0;
  double epsilon = 0.0;
  MobilityMean mean = MobilityMean::arithmetic;

  /// Throws InvalidArgument naming the violated constraint.
  void validate() const {
    if (!std::isfinite(m) || !(m > 1.0))
      throw InvalidArgument("flux: diffusion exponent must satisfy m > 1 (got " +
                            std::to_string(m) + ")");
    if (!std::isfinite(chi) || chi < 0.0)
      throw InvalidArgument("flux: sensitivity must satisfy chi >= 0");
    if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon > 1.0)
      throw InvalidArgument("flux: regularization must satisfy 0 <= epsilon <= 1");
  }

  bool operator==(const FluxSpec&) const = default;
};

namespace detail {

inline std::array<int, 3> shifted(int i, int j, int k, int axis, int by) {
  std::array<int, 3> p{i, j, k};
  p[axis] += by;
  return p;
}

}  // namespace detail

/// Face-centered difference quotient (f_i - f_{i-1}) / h, taken through the
/// ghost layer on boundary faces (zero for Neumann-filled fields).
inline VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  VectorField out(g);
  for (int c = 0; c < g.ndim(); ++c) {
    const double inv_h = 1.0 / g.h(c);
    const auto s = f.stride(c);
    const auto raw = f.raw();
    out.for_each_face(c, [&](int i, int j, int k) {
      const std::size_t p = f.index(i, j, k);
      out(c, i, j, k) = (raw[p] - raw[p - s]) * inv_h;
    });
  }
  return out;
}

/// Cell-centered flux difference; ghosts of the result are Neumann-filled.
inline ScalarField divergence(const VectorField& v) {
  const Grid& g = v.grid();
  ScalarField out(g);
  for_each_cell(g, [&](int i, int j, int k) {
    double d = 0.0;
    for (int c = 0; c < g.ndim(); ++c) {
      const auto hi = detail::shifted(i, j, k, c, 1);
      d += (v(c, hi[0], hi[1], hi[2]) - v(c, i, j, k)) / g.h(c);
    }
    out(i, j, k) = d;
  });
  out.fill_ghosts();
  return out;
}

inline ScalarField laplacian(const ScalarField& f) { return divergence(gradient(f)); }

/// Regularized porous-medium flux m (eps + n_face)^(m-1) dn/dx on every
/// interior face; boundary faces carry no flux.
inline VectorField pm_flux(const ScalarField& n, const FluxSpec& spec,
                           double negative_tolerance = 1e-10) {
  const Grid& g = n.grid();
  if (n.min() < -negative_tolerance) {
    std::ostringstream msg;
    msg << "pm_flux: density has entries below -" << negative_tolerance
        << " (min " << n.min() << ")";
    throw DegenerateInput(msg.str());
  }
  VectorField out(g);
  const double expo = spec.m - 1.0;
  for (int c = 0; c < g.ndim(); ++c) {
    const double inv_h = 1.0 / g.h(c);
    out.for_each_face(c, [&](int i, int j, int k) {
      if (VectorField::is_boundary_face(g, c, i, j, k)) return;
      const auto lo = detail::shifted(i, j, k, c, -1);
      const double a = std::max(n(lo[0], lo[1], lo[2]), 0.0);
      const double b = std::max(n(i, j, k), 0.0);
      double mob;
      if (spec.mean == MobilityMean::arithmetic) {
        mob = std::pow(spec.epsilon + 0.5 * (a + b), expo);
      } else {
        const double ma = std::pow(spec.epsilon + a, expo);
        const double mb = std::pow(spec.epsilon + b, expo);
        mob = (ma + mb) > 0.0 ? 2.0 * ma * mb / (ma + mb) : 0.0;
      }
      out(c, i, j, k) = spec.m * mob * (n(i, j, k) - n(lo[0], lo[1], lo[2])) * inv_h;
    });
  }
  return out;
}

/// Chemotactic flux chi * n_upwind * dc/dx; n taken from the cell the drift
/// chi * grad c leaves. Boundary faces carry no flux.
inline VectorField chemo_flux(const ScalarField& n, const ScalarField& c,
                              const FluxSpec& spec) {
  const Grid& g = n.grid();
  VectorField out(g);
  for (int a = 0; a < g.ndim(); ++a) {
    const double inv_h = 1.0 / g.h(a);
    out.for_each_face(a, [&](int i, int j, int k) {
      if (VectorField::is_boundary_face(g, a, i, j, k)) return;
      const auto lo = detail::shifted(i, j, k, a, -1);
      const double dc = (c(i, j, k) - c(lo[0], lo[1], lo[2])) * inv_h;
      const double up = dc > 0.0 ? n(lo[0], lo[1], lo[2]) : n(i, j, k);
      out(a, i, j, k) = spec.chi * up * dc;
    });
  }
  return out;
}

enum class Reconstruction {
  upwind,     ///< first order, donor cell
  van_leer,   ///< limited linear upwind
};

namespace detail {

inline double van_leer_slope(double dl, double dr) {
  return dl * dr > 0.0 ? 2.0 * dl * dr / (dl + dr) : 0.0;
}

}  // namespace detail

/// Face fluxes u * q_face with q_face reconstructed on the upwind side.
inline VectorField advective_flux(const ScalarField& q, const VectorField& u,
                                  Reconstruction rec = Reconstruction::upwind) {
  const Grid& g = q.grid();
  VectorField out(g);
  for (int a = 0; a < g.ndim(); ++a) {
    const int na = g.n(a);
    out.for_each_face(a, [&](int i, int j, int k) {
      if (VectorField::is_boundary_face(g, a, i, j, k)) return;
      const double vel = u(a, i, j, k);
      if (vel == 0.0) return;
      const std::array<int, 3> idx{i, j, k};
      const int face = idx[a];
      // donor cell and its neighbours along the axis (clamped = even reflection)
      const int donor = vel > 0.0 ? face - 1 : face;
      const int dir = vel > 0.0 ? 1 : -1;
      auto at = [&](int cell) {
        auto p = idx;
        p[a] = std::clamp(cell, 0, na - 1);
        return q(p[0], p[1], p[2]);
      };
      double qf = at(donor);
      if (rec == Reconstruction::van_leer) {
        const double back = at(donor - dir);
        const double fwd = at(donor + dir);
        qf += 0.5 * detail::van_leer_slope(qf - back, fwd - qf);
      }
      out(a, i, j, k) = vel * qf;
    });
  }
  return out;
}

/// Conservative transport div(u q). Throws NotSolenoidal if |div u| exceeds
/// `div_tolerance` anywhere.
inline ScalarField advect(const ScalarField& q, const VectorField& u,
                          Reconstruction rec = Reconstruction::upwind,
                          double div_tolerance = 1e-9) {
  const double d = divergence(u).max_abs();
  if (d > div_tolerance) {
    std::ostringstream msg;
    msg << "advect: max |div u| = " << d << " exceeds " << div_tolerance;
    throw NotSolenoidal(msg.str());
  }
  return divergence(advective_flux(q, u, rec));
}

/// Non-conservative first-order upwind u . grad q (equals advect minus
/// q div u). An explicit step q - dt * rate is a convex combination of
/// neighbouring values under the transport CFL limit.
inline ScalarField transport_rate(const ScalarField& q, const VectorField& u) {
  const Grid& g = q.grid();
  ScalarField out(g);
  for_each_cell(g, [&](int i, int j, int k) {
    double r = 0.0;
    const double qc = q(i, j, k);
    for (int a = 0; a < g.ndim(); ++a) {
      const auto hi = detail::shifted(i, j, k, a, 1);
      const auto lo = detail::shifted(i, j, k, a, -1);
      const double u_lo = u(a, i, j, k);             // face between lo and here
      const double u_hi = u(a, hi[0], hi[1], hi[2]);  // face between here and hi
      // inflow through the low face when u_lo > 0, through the high face when u_hi < 0
      if (u_lo > 0.0) r += u_lo * (qc - q(lo[0], lo[1], lo[2])) / g.h(a);
      if (u_hi < 0.0) r += -u_hi * (qc - q(hi[0], hi[1], hi[2])) / g.h(a);
    }
    out(i, j, k) = r;
  });
  out.fill_ghosts();
  return out;
}

/// Cell-centered gradient: mean of the two face quotients along each axis.
inline std::array<ScalarField, 3> cell_gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  std::array<ScalarField, 3> out;
  for (int a = 0; a < g.ndim(); ++a) {
    out[a] = ScalarField(g);
    const auto s = f.stride(a);
    const auto raw = f.raw();
    const double inv = 0.5 / g.h(a);
    for_each_cell(g, [&](int i, int j, int k) {
      const std::size_t p = f.index(i, j, k);
      out[a](i, j, k) = (raw[p + s] - raw[p - s]) * inv;
    });
    out[a].fill_ghosts();
  }
  return out;
}

/// Symmetric Hessian at cell centers. Diagonal entries are the compact
/// second difference (their trace is exactly laplacian(f)); off-diagonal
/// entries are centered differences of the cell gradient, which commute.
inline std::array<std::array<ScalarField, 3>, 3> hessian(const ScalarField& f) {
  const Grid& g = f.grid();
  const int d = g.ndim();
  std::array<std::array<ScalarField, 3>, 3> out;
  const auto grad = cell_gradient(f);
  for (int a = 0; a < d; ++a) {
    out[a][a] = ScalarField(g);
    const auto s = f.stride(a);
    const auto raw = f.raw();
    const double inv = 1.0 / (g.h(a) * g.h(a));
    for_each_cell(g, [&](int i, int j, int k) {
      const std::size_t p = f.index(i, j, k);
      out[a][a](i, j, k) = ((raw[p + s] - raw[p]) - (raw[p] - raw[p - s])) * inv;
    });
    out[a][a].fill_ghosts();
  }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      out[a][b] = cell_gradient(grad[a])[b];
      out[b][a] = out[a][b];
    }
  return out;
}

/// |grad f|^2 at cell centers from the cell gradient.
inline ScalarField grad_norm_sq(const ScalarField& f) {
  const auto gr = cell_gradient(f);
  const Grid& g = f.grid();
  ScalarField out(g);
  for_each_cell(g, [&](int i, int j, int k) {
    double s = 0.0;
    for (int a = 0; a < g.ndim(); ++a) s += gr[a](i, j, k) * gr[a](i, j, k);
    out(i, j, k) = s;
  });
  out.fill_ghosts();
  return out;
}

}  // namespace cstk
