#pragma once

// Operator-split step of the regularized chemotaxis-Stokes system:
//   n:  explicit conservative fluxes  pm_flux - chemo_flux - u n
//   c:  explicit upwind transport, implicit diffusion, implicit consumption
//   u:  Stokes step forced by n grad(phi), pressure carried in the state
// followed by invariant checks that reject the step on violation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "cstk/initial.hpp"
#include "cstk/operators.hpp"
#include "cstk/stokes.hpp"

namespace cstk {

inline constexpr double kPositivityTolerance = 1e-12;
inline constexpr double kMaxPrincipleTolerance = 1e-12;
inline constexpr double kStepMassTolerance = 1e-13;

struct SimParams {
  FluxSpec flux;
  ScalarField phi;  ///< gravitational potential
  double dt_init = 1e-2;
  double cfl_target = 0.5;
  double t_end = 1.0;
  double dt_min = 1e-9;
  double dt_max = 1e-2;
  /// Relative residual of the implicit oxygen diffusion solve.
  double diffusion_tolerance = 1e-13;

  void validate() const {
    flux.validate();
    if (!(cfl_target > 0.0 && cfl_target < 1.0))
      throw InvalidArgument("params: cfl_target must lie in (0, 1)");
    if (!(dt_min > 0.0) || !(dt_min <= dt_init) || !(dt_init <= dt_max))
      throw InvalidArgument("params: need 0 < dt_min <= dt_init <= dt_max");
    if (!std::isfinite(t_end) || t_end < 0.0)
      throw InvalidArgument("params: t_end must be finite and >= 0");
    if (!phi.all_finite() || !gradient(phi).all_finite())
      throw InvalidArgument("params: potential must have a finite gradient");
  }
};

/// Linear potential phi = g . x, i.e. constant gravity grad(phi) = g.
inline ScalarField linear_potential(const Grid& grid, std::array<double, 3> g) {
  return ScalarField::sample(grid, [&](double x, double y, double z) {
    return g[0] * x + g[1] * y + g[2] * z;
  });
}

struct SimState {
  ScalarField n;
  ScalarField c;
  VectorField u;
  ScalarField pi;
  double t = 0.0;
};

inline SimState initial_state(const InitialCondition& ic) {
  return {ic.n0, ic.c0, ic.u0, ScalarField(ic.n0.grid()), 0.0};
}

/// Largest face difference quotient of a cell field.
inline double max_face_gradient(const ScalarField& f) { return gradient(f).max_abs(); }

/// cfl_target * min(h^2 / (2 d m max(eps + n)^(m-1)), h / (chi |grad c|_inf + |u|_inf)),
/// clamped to [dt_min, dt_max].
inline double stable_dt(const SimState& s, const SimParams& p) {
  const Grid& g = s.n.grid();
  const double h = g.min_spacing();
  const double d = g.ndim();
  const double mob = std::pow(p.flux.epsilon + std::max(s.n.max(), 0.0), p.flux.m - 1.0);
  double bound = std::numeric_limits<double>::infinity();
  if (mob > 0.0) bound = h * h / (2.0 * d * p.flux.m * mob);
  const double speed = p.flux.chi * max_face_gradient(s.c) + s.u.max_abs();
  if (speed > 0.0) bound = std::min(bound, h / speed);
  const double dt = p.cfl_target * bound;
  return std::clamp(dt, p.dt_min, p.dt_max);
}

/// Advances the state by dt. Throws StepRejected when positivity of n, the
/// oxygen bounds or per-step mass conservation would fail.
inline SimState step(const SimState& s, const SimParams& p, StokesWorkspace& ws, double dt) {
  const Grid& g = s.n.grid();
  if (!(dt > 0.0)) throw InvalidArgument("step: dt must be > 0");

  // (1) cell density, explicit flux form
  VectorField flux = pm_flux(s.n, p.flux);
  flux -= chemo_flux(s.n, s.c, p.flux);
  flux -= advective_flux(s.n, s.u, Reconstruction::upwind);
  const ScalarField dn = divergence(flux);
  ScalarField n(g);
  for_each_cell(g, [&](int i, int j, int k) { n(i, j, k) = s.n(i, j, k) + dt * dn(i, j, k); });
  n.fill_ghosts();
  if (!n.all_finite()) throw StepRejected("step: non-finite density");
  if (const double lo = n.min(); lo < -kPositivityTolerance) {
    std::ostringstream msg;
    msg << "step: density min " << lo << " below -" << kPositivityTolerance;
    throw StepRejected(msg.str());
  }
  const double m0 = integrate(s.n), m1 = integrate(n);
  if (std::abs(m1 - m0) > kStepMassTolerance * std::max(std::abs(m0), 1e-300)) {
    std::ostringstream msg;
    msg << "step: mass changed by " << (m1 - m0) << " (of " << m0 << ")";
    throw StepRejected(msg.str());
  }

  // (2) oxygen: transport, diffusion, consumption c / (1 + dt n)
  const ScalarField rate = transport_rate(s.c, s.u);
  ScalarField cstar(g);
  for_each_cell(g, [&](int i, int j, int k) { cstar(i, j, k) = s.c(i, j, k) - dt * rate(i, j, k); });
  cstar.fill_ghosts();
  ScalarField c = solve_implicit_diffusion(cstar, dt, p.diffusion_tolerance, ws.cap(g), nullptr,
                                           ws.preconditioner);
  for_each_cell(g, [&](int i, int j, int k) {
    c(i, j, k) = c(i, j, k) / (1.0 + dt * std::max(n(i, j, k), 0.0));
  });
  c.fill_ghosts();
  const double c_hi = s.c.max();
  if (!c.all_finite() || c.min() < -kMaxPrincipleTolerance ||
      c.max() > c_hi + kMaxPrincipleTolerance) {
    std::ostringstream msg;
    msg << "step: oxygen range [" << c.min() << ", " << c.max() << "] leaves [0, " << c_hi << "]";
    throw StepRejected(msg.str());
  }

  // (3) fluid
  StokesStep fluid = stokes_step(s.u, n, gradient(p.phi), dt, ws, &s.pi);
  return {std::move(n), std::move(c), std::move(fluid.u), std::move(fluid.pi), s.t + dt};
}

enum class RunStatus { completed, dt_underflow };

struct RunResult {
  SimState state;
  RunStatus status = RunStatus::completed;
  std::string diagnostic;
  long steps = 0;
  long rejections = 0;
  double smallest_dt = std::numeric_limits<double>::infinity();
};

/// Output hooks. Audit and snapshot hooks fire at t = 0 and at every
/// multiple of their cadence up to t_end (the final time always fires);
/// the step hook fires after every accepted step.
struct RunHooks {
  double audit_cadence = 0.0;
  std::function<void(const SimState&)> on_audit;
  double snapshot_cadence = 0.0;
  std::function<void(const SimState&)> on_snapshot;
  std::function<void(const SimState&, double dt)> on_step;
  /// Receives the last good state when dt underflows.
  std::function<void(const SimState&, const std::string&)> on_abort;
};

namespace detail {

struct Cadence {
  double every = 0.0;
  long next = 1;
  double next_time() const {
    return every > 0.0 ? next * every : std::numeric_limits<double>::infinity();
  }
};

}  // namespace detail

/// Integrates from the initial condition to params.t_end with adaptive dt.
inline RunResult run(const InitialCondition& ic, const SimParams& params, const RunHooks& hooks = {}) {
  params.validate();
  check_admissible(ic);
  RunResult res;
  res.state = initial_state(ic);
  StokesWorkspace ws;
  SimState& s = res.state;
  if (hooks.on_audit) hooks.on_audit(s);
  if (hooks.on_snapshot) hooks.on_snapshot(s);

  detail::Cadence audit{hooks.audit_cadence}, snap{hooks.snapshot_cadence};
  const double t_end = params.t_end;
  // events closer than this are considered reached
  const double eps_t = 1e-12 * std::max(1.0, t_end);
  double dt_cap = params.dt_init;

  while (s.t < t_end - eps_t) {
    const double t_next = std::min({t_end, audit.next_time(), snap.next_time()});
    double dt = std::min({stable_dt(s, params), dt_cap, t_next - s.t});
    for (;;) {
      try {
        SimState next = step(s, params, ws, dt);
        if (t_next - next.t <= eps_t) next.t = t_next;
        s = std::move(next);
        break;
      } catch (const StepRejected& e) {
        ++res.rejections;
        dt *= 0.5;
        if (dt < params.dt_min) {
          std::ostringstream msg;
          msg << "dt underflow below " << params.dt_min << " at t = " << s.t
              << " (potential blow-up): " << e.what();
          res.status = RunStatus::dt_underflow;
          res.diagnostic = msg.str();
          if (hooks.on_abort) hooks.on_abort(s, res.diagnostic);
          return res;
        }
        dt_cap = dt;
      }
    }
    ++res.steps;
    res.smallest_dt = std::min(res.smallest_dt, dt);
    dt_cap = std::min(dt_cap * 1.2, params.dt_max);
    if (hooks.on_step) hooks.on_step(s, dt);

    const bool at_end = s.t >= t_end - eps_t;
    if (audit.next_time() - s.t <= eps_t || (at_end && audit.every > 0.0)) {
      while (audit.next_time() <= s.t + eps_t) ++audit.next;
      if (hooks.on_audit) hooks.on_audit(s);
    } else if (at_end && hooks.on_audit) {
      hooks.on_audit(s);
    }
    if (snap.next_time() - s.t <= eps_t || (at_end && snap.every > 0.0)) {
      while (snap.next_time() <= s.t + eps_t) ++snap.next;
      if (hooks.on_snapshot) hooks.on_snapshot(s);
    } else if (at_end && hooks.on_snapshot) {
      hooks.on_snapshot(s);
    }
  }
  return res;
}

}  // namespace cstk
