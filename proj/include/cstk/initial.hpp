#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "cstk/grid.hpp"
#include "cstk/stokes.hpp"

namespace cstk {

struct InitialCondition {
  ScalarField n0;
  ScalarField c0;
  VectorField u0;
};

/// Named initial-condition recipe. Unused parameters are ignored by a preset.
struct IcPreset {
  std::string name = "gaussian-blob";  ///< constant | gaussian-blob | stratified-oxygen | random-perturbed
  double n_value = 1.0;     ///< uniform / mean density
  double c_value = 1.0;     ///< uniform / mean oxygen
  std::array<double, 3> center{kUnset, kUnset, kUnset};  ///< blob center, defaults to box center
  double sigma = 1.0;       ///< blob width
  double mass = 1.0;        ///< total blob mass
  double amplitude = 0.1;   ///< relative random perturbation of n and c, in [0, 1]
  double u_amplitude = 0.0; ///< random velocity amplitude before projection
  double c_min = 0.0;       ///< stratified oxygen at the bottom wall
  double c_max = 1.0;       ///< stratified oxygen at the top wall
  std::uint64_t seed = 1;

  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  bool operator==(const IcPreset& o) const {
    auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
    for (int a = 0; a < 3; ++a)
      if (!same(center[a], o.center[a])) return false;
    return name == o.name && n_value == o.n_value && c_value == o.c_value &&
           sigma == o.sigma && mass == o.mass && amplitude == o.amplitude &&
           u_amplitude == o.u_amplitude && c_min == o.c_min && c_max == o.c_max &&
           seed == o.seed;
  }
};

/// One pass of the separable binomial kernel (1 4 6 4 1)/16 per axis, i.e.
/// a mollifier of half-width 2h. Walls reflect evenly, so the pass keeps
/// the integral and nonnegativity.
inline ScalarField mollify(const ScalarField& f) {
  static constexpr double w[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const Grid& g = f.grid();
  ScalarField cur = f;
  for (int a = 0; a < g.ndim(); ++a) {
    ScalarField next(g);
    const int na = g.n(a);
    for_each_cell(g, [&](int i, int j, int k) {
      std::array<int, 3> p{i, j, k};
      const int c = p[a];
      double s = 0.0;
      for (int o = -2; o <= 2; ++o) {
        int q = c + o;
        if (q < 0) q = -q - 1;
        if (q >= na) q = 2 * na - q - 1;
        p[a] = q;
        s += w[o + 2] * cur(p[0], p[1], p[2]);
      }
      next(i, j, k) = s;
    });
    next.fill_ghosts();
    cur = std::move(next);
  }
  return cur;
}

namespace detail {

inline double uniform_pm1(std::mt19937_64& rng) {
  // 53 random bits mapped to [-1, 1); independent of <random> distributions
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

inline void require_nonnegative(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0)
    throw InvalidArgument(std::string("initial condition: ") + what + " must be finite and >= 0");
}

}  // namespace detail

/// Builds n0, c0, u0 for a preset; u0 is projected divergence-free.
inline InitialCondition make_initial(const Grid& g, const IcPreset& p) {
  detail::require_nonnegative(p.n_value, "n_value");
  detail::require_nonnegative(p.c_value, "c_value");
  detail::require_nonnegative(p.mass, "mass");
  detail::require_nonnegative(p.amplitude, "amplitude");
  detail::require_nonnegative(p.u_amplitude, "u_amplitude");
  detail::require_nonnegative(p.c_min, "c_min");
  detail::require_nonnegative(p.c_max, "c_max");

  InitialCondition ic{ScalarField(g), ScalarField(g), VectorField(g)};
  if (p.name == "constant") {
    ic.n0 = ScalarField(g, p.n_value);
    ic.c0 = ScalarField(g, p.c_value);
  } else if (p.name == "gaussian-blob") {
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma))
      throw InvalidArgument("initial condition: sigma must be > 0");
    std::array<double, 3> ctr{};
    for (int a = 0; a < 3; ++a)
      ctr[a] = std::isnan(p.center[a]) ? (g.active(a) ? 0.5 * g.length(a) : 0.0) : p.center[a];
    const double s2 = 2.0 * p.sigma * p.sigma;
    ScalarField bump = ScalarField::sample(g, [&](double x, double y, double z) {
      const double r2 = (x - ctr[0]) * (x - ctr[0]) + (y - ctr[1]) * (y - ctr[1]) +
                        (z - ctr[2]) * (z - ctr[2]);
      return std::exp(-r2 / s2);
    });
    const double total = integrate(bump);
    ic.n0 = bump.map([&](double v) { return p.mass * v / total; });
    ic.c0 = ScalarField(g, p.c_value);
  } else if (p.name == "stratified-oxygen") {
    const int up = g.ndim() - 1;
    ic.n0 = ScalarField(g, p.n_value);
    ic.c0 = ScalarField::sample(g, [&](double x, double y, double z) {
      const double h = up == 1 ? y : z;
      (void)x;
      return p.c_min + (p.c_max - p.c_min) * h / g.length(up);
    });
  } else if (p.name == "random-perturbed") {
    if (p.amplitude > 1.0)
      throw InvalidArgument("initial condition: amplitude must be <= 1 to keep n0, c0 >= 0");
    std::mt19937_64 rng(p.seed);
    ScalarField n(g), c(g);
    for_each_cell(g, [&](int i, int j, int k) {
      n(i, j, k) = p.n_value * (1.0 + p.amplitude * detail::uniform_pm1(rng));
      c(i, j, k) = p.c_value * (1.0 + p.amplitude * detail::uniform_pm1(rng));
    });
    n.fill_ghosts();
    c.fill_ghosts();
    ic.n0 = mollify(n);
    ic.c0 = mollify(c);
    if (p.u_amplitude > 0.0) {
      for (int comp = 0; comp < g.ndim(); ++comp)
        ic.u0.for_each_face(comp, [&](int i, int j, int k) {
          ic.u0(comp, i, j, k) = p.u_amplitude * detail::uniform_pm1(rng);
        });
      ic.u0.zero_boundary();
    }
  } else {
    throw InvalidArgument("initial condition: unknown preset '" + p.name + "'");
  }

  if (ic.u0.max_abs() > 0.0) {
    StokesWorkspace ws;
    ic.u0 = project_div_free(ic.u0, ws).field;
    ic.u0.zero_boundary();
  }
  return ic;
}

/// Checks n0, c0 >= 0, finiteness, no-slip u0 and div u0 <= tol.
inline void check_admissible(const InitialCondition& ic, double div_tolerance = 1e-10) {
  if (!ic.n0.all_finite() || !ic.c0.all_finite() || !ic.u0.all_finite())
    throw InvalidArgument("initial condition: non-finite values");
  if (ic.n0.min() < 0.0) throw InvalidArgument("initial condition: n0 must be >= 0");
  if (ic.c0.min() < 0.0) throw InvalidArgument("initial condition: c0 must be >= 0");
  const Grid& g = ic.u0.grid();
  for (int c = 0; c < g.ndim(); ++c)
    ic.u0.for_each_face(c, [&](int i, int j, int k) {
      if (VectorField::is_boundary_face(g, c, i, j, k) && ic.u0(c, i, j, k) != 0.0)
        throw InvalidArgument("initial condition: u0 must vanish on the walls");
    });
  if (divergence(ic.u0).max_abs() > div_tolerance)
    throw InvalidArgument("initial condition: u0 is not divergence-free");
}

}  // namespace cstk
