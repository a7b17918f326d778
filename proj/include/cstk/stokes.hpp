#pragma once

// Stokes fluid: implicit Euler viscous predictor with the previous pressure
// gradient, followed by the discrete Helmholtz projection.

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "cstk/elliptic.hpp"
#include "cstk/grid.hpp"
#include "cstk/operators.hpp"

namespace cstk {

struct StokesWorkspace {
  /// Max-norm bound on the divergence left by a projection.
  double tolerance = 1e-10;
  /// CG iteration cap; 0 selects default_iteration_cap(grid).
  int max_iterations = 0;
  /// Relative residual target of the viscous solves.
  double viscous_tolerance = 1e-13;
  Preconditioner preconditioner = Preconditioner::cosine;

  // warm start for the potential solve
  std::vector<double> potential_guess;
  SolveStats last_projection;
  SolveStats last_viscous;

  void validate() const {
    if (!(tolerance > 0.0)) throw InvalidArgument("stokes: tolerance must be > 0");
    if (max_iterations < 0) throw InvalidArgument("stokes: max_iterations must be >= 1");
  }
  int cap(const Grid& g) const {
    return max_iterations > 0 ? max_iterations : default_iteration_cap(g);
  }
};

struct Projection {
  VectorField field;      ///< v - grad q
  ScalarField potential;  ///< q, mean zero
};

/// Discrete Helmholtz projection: solves Laplacian q = div v with Neumann
/// walls and returns (v - grad q, q). Boundary-normal components of v are
/// left as they are (grad q vanishes there).
inline Projection project_div_free(const VectorField& v, StokesWorkspace& ws) {
  ws.validate();
  const Grid& g = v.grid();
  if (!v.all_finite()) throw InvalidArgument("project_div_free: non-finite input");
  const ScalarField div = divergence(v);
  // half the budget for the solve, the rest covers re-evaluation rounding
  ScalarField q = solve_neumann_poisson(div, 0.5 * ws.tolerance, ws.cap(g),
                                        &ws.potential_guess, &ws.last_projection, ws.preconditioner);
  VectorField out = v;
  out -= gradient(q);
  const double residual = divergence(out).max_abs();
  if (residual > ws.tolerance) {
    std::ostringstream msg;
    msg << "project_div_free: divergence " << residual << " above tolerance "
        << ws.tolerance;
    throw NoConvergence(msg.str());
  }
  return {std::move(out), std::move(q)};
}

/// Body force n_face * grad_phi on interior faces; n_face is the arithmetic
/// mean of the two adjacent cells.
inline VectorField buoyancy_force(const ScalarField& n, const VectorField& grad_phi) {
  const Grid& g = n.grid();
  VectorField f(g);
  for (int c = 0; c < g.ndim(); ++c)
    f.for_each_face(c, [&](int i, int j, int k) {
      if (VectorField::is_boundary_face(g, c, i, j, k)) return;
      const auto lo = detail::shifted(i, j, k, c, -1);
      f(c, i, j, k) = 0.5 * (n(i, j, k) + n(lo[0], lo[1], lo[2])) * grad_phi(c, i, j, k);
    });
  return f;
}

/// Integral of |u|^2 with trapezoid weights on the staggered faces.
inline double kinetic_energy(const VectorField& u) { return inner(u, u); }

/// Same integral via cell-centered interpolation of u_c^2 (mean of the two
/// faces of each cell), integrated with the cell quadrature.
inline double kinetic_energy_centered(const VectorField& u) {
  const Grid& g = u.grid();
  ScalarField e(g);
  for_each_cell(g, [&](int i, int j, int k) {
    double s = 0.0;
    for (int c = 0; c < g.ndim(); ++c) {
      const auto hi = detail::shifted(i, j, k, c, 1);
      const double a = u(c, i, j, k), b = u(c, hi[0], hi[1], hi[2]);
      s += 0.5 * (a * a + b * b);
    }
    e(i, j, k) = s;
  });
  return integrate(e);
}

/// Integral of |grad u|^2 over the difference quotients of the staggered
/// components, walls parallel to a component using the odd ghost. Equals
/// -<u, vector_laplacian(u)> for no-slip fields.
inline double velocity_gradient_energy(const VectorField& u) {
  const Grid& g = u.grid();
  double s = 0.0;
  for (int c = 0; c < g.ndim(); ++c) {
    for (int b = 0; b < g.ndim(); ++b) {
      const double inv_h = 1.0 / g.h(b);
      if (b == c) {
        for_each_cell(g, [&](int i, int j, int k) {
          const auto hi = detail::shifted(i, j, k, c, 1);
          const double d = (u(c, hi[0], hi[1], hi[2]) - u(c, i, j, k)) * inv_h;
          s += d * d;
        });
      } else {
        const int nb = g.n(b);
        u.for_each_face(c, [&](int i, int j, int k) {
          const double wf = face_weight(g, c, i, j, k);
          const std::array<int, 3> idx{i, j, k};
          const double here = u(c, i, j, k);
          if (idx[b] == 0) s += wf * 0.5 * (2.0 * here * inv_h) * (2.0 * here * inv_h);
          if (idx[b] == nb - 1) s += wf * 0.5 * (2.0 * here * inv_h) * (2.0 * here * inv_h);
          if (idx[b] > 0) {
            const auto lo = detail::shifted(i, j, k, b, -1);
            const double d = (here - u(c, lo[0], lo[1], lo[2])) * inv_h;
            s += wf * d * d;
          }
        });
      }
    }
  }
  return s * g.cell_volume();
}

/// Largest difference quotient magnitude of u (companion of velocity_gradient_energy).
inline double velocity_gradient_max(const VectorField& u) {
  const Grid& g = u.grid();
  double m = 0.0;
  for (int c = 0; c < g.ndim(); ++c)
    u.for_each_face(c, [&](int i, int j, int k) {
      const std::array<int, 3> idx{i, j, k};
      for (int b = 0; b < g.ndim(); ++b) {
        const double here = u(c, i, j, k);
        if (b == c) {
          if (idx[b] < g.n(b)) {
            const auto hi = detail::shifted(i, j, k, c, 1);
            m = std::max(m, std::abs(u(c, hi[0], hi[1], hi[2]) - here) / g.h(b));
          }
        } else {
          if (idx[b] == 0 || idx[b] == g.n(b) - 1) m = std::max(m, 2.0 * std::abs(here) / g.h(b));
          if (idx[b] > 0) {
            const auto lo = detail::shifted(i, j, k, b, -1);
            m = std::max(m, std::abs(here - u(c, lo[0], lo[1], lo[2])) / g.h(b));
          }
        }
      }
    });
  return m;
}

struct StokesStep {
  VectorField u;   ///< projected velocity
  ScalarField pi;  ///< pressure, mean zero
  // Energy bookkeeping of the predictor u*: 0.5 (|u_new|^2 - |u|^2) / dt is
  // bounded by forcing_power + pressure_work - dissipation.
  double forcing_power = 0.0;  ///< <f, u*>
  double pressure_work = 0.0;  ///< -<grad pi_old, u*>
  double dissipation = 0.0;    ///< integral |grad u*|^2
};

/// One incremental pressure-correction step with a face body force f:
/// (I - dt Laplacian) u* = u + dt (f - grad pi_old), u_new = u* - grad q,
/// pi = pi_old + q / dt. A null pi_old starts from zero pressure.
inline StokesStep stokes_step_forced(const VectorField& u, const VectorField& force, double dt,
                                     StokesWorkspace& ws, const ScalarField* pi_old = nullptr) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("stokes_step: dt must be > 0");
  const Grid& g = u.grid();
  VectorField drive = force;
  VectorField grad_p(g);
  if (pi_old) {
    grad_p = gradient(*pi_old);
    grad_p.zero_boundary();
    drive -= grad_p;
  }
  VectorField rhs = drive;
  rhs *= dt;
  rhs += u;
  VectorField ustar = solve_viscous(rhs, dt, ws.viscous_tolerance, ws.cap(g), &ws.last_viscous,
                                    ws.preconditioner);
  StokesStep out;
  out.forcing_power = inner(force, ustar);
  out.pressure_work = -inner(grad_p, ustar);
  out.dissipation = velocity_gradient_energy(ustar);
  Projection p = project_div_free(ustar, ws);
  out.u = std::move(p.field);
  out.u.zero_boundary();
  out.pi = p.potential.map([dt](double q) { return q / dt; });
  if (pi_old) {
    for_each_cell(g, [&](int i, int j, int k) { out.pi(i, j, k) += (*pi_old)(i, j, k); });
    const double mean = integrate(out.pi) / g.volume();
    out.pi = out.pi.map([mean](double v) { return v - mean; });
  }
  return out;
}

/// Stokes step driven by the buoyancy n grad(phi).
inline StokesStep stokes_step(const VectorField& u, const ScalarField& n,
                              const VectorField& grad_phi, double dt, StokesWorkspace& ws,
                              const ScalarField* pi_old = nullptr) {
  return stokes_step_forced(u, buoyancy_force(n, grad_phi), dt, ws, pi_old);
}

}  // namespace cstk
