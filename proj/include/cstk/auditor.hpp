#pragma once

// Energy functionals along a trajectory and the checks run on their time
// series. All functionals use one quadrature: cell-centered values and
// cell-centered gradients (mean of the adjacent face quotients), summed
// with the cell volume.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cstk/operators.hpp"
#include "cstk/stokes.hpp"
#include "cstk/timestepper.hpp"

namespace cstk {

struct EnergyReport {
  double t = 0.0;
  double mass_n = 0.0;
  double linf_c = 0.0;
  double fisher_c = 0.0;
  double entropy_n = 0.0;
  double ke_u = 0.0;
  double lm_n = 0.0;
  double grad_nm_l2 = 0.0;
  double grad_sqrt_n = 0.0;
  double lap_c_l2 = 0.0;
  double grad_c_l4 = 0.0;
  double d_hess_ln_c = 0.0;
  double d_cross = 0.0;
  double d_grad_nm_half = 0.0;
  double d_grad_u = 0.0;
  double linf_n = 0.0;
  double w1inf_c = 0.0;
  double w1inf_u = 0.0;
  // extras, after the listed functionals
  double min_n = 0.0;
  double min_c = 0.0;
  double c_guard_cells = 0.0;  ///< cells where c < c_floor
  double n_guard_cells = 0.0;  ///< cells where n < n_floor
  /// F = fisher_c + (2/chi) entropy_n + 2 ke_u, the Lyapunov-type combination
  /// with unit coupling constant; NaN when chi = 0.
  double lyapunov_f = 0.0;
  /// D = d_hess_ln_c + d_cross + 7/(m chi) d_grad_nm_half + d_grad_u; NaN when chi = 0.
  double lyapunov_d = 0.0;

  bool operator==(const EnergyReport&) const = default;
};

using ReportMember = double EnergyReport::*;

struct ReportColumn {
  const char* name;
  ReportMember member;
};

inline constexpr int kAuditCsvVersion = 1;

/// Column order of the audit CSV.
inline const std::vector<ReportColumn>& report_columns() {
  static const std::vector<ReportColumn> cols = {
      {"t", &EnergyReport::t},
      {"mass_n", &EnergyReport::mass_n},
      {"linf_c", &EnergyReport::linf_c},
      {"fisher_c", &EnergyReport::fisher_c},
      {"entropy_n", &EnergyReport::entropy_n},
      {"ke_u", &EnergyReport::ke_u},
      {"lm_n", &EnergyReport::lm_n},
      {"grad_nm_l2", &EnergyReport::grad_nm_l2},
      {"grad_sqrt_n", &EnergyReport::grad_sqrt_n},
      {"lap_c_l2", &EnergyReport::lap_c_l2},
      {"grad_c_l4", &EnergyReport::grad_c_l4},
      {"d_hess_ln_c", &EnergyReport::d_hess_ln_c},
      {"d_cross", &EnergyReport::d_cross},
      {"d_grad_nm_half", &EnergyReport::d_grad_nm_half},
      {"d_grad_u", &EnergyReport::d_grad_u},
      {"linf_n", &EnergyReport::linf_n},
      {"w1inf_c", &EnergyReport::w1inf_c},
      {"w1inf_u", &EnergyReport::w1inf_u},
      {"min_n", &EnergyReport::min_n},
      {"min_c", &EnergyReport::min_c},
      {"c_guard_cells", &EnergyReport::c_guard_cells},
      {"n_guard_cells", &EnergyReport::n_guard_cells},
      {"lyapunov_f", &EnergyReport::lyapunov_f},
      {"lyapunov_d", &EnergyReport::lyapunov_d},
  };
  return cols;
}

inline ReportMember report_member(const std::string& name) {
  for (const auto& c : report_columns())
    if (name == c.name) return c.member;
  throw InvalidArgument("audit: unknown functional '" + name + "'");
}

/// Reference magnitudes for the division guards: floor = 1e-12 * reference.
struct AuditScales {
  double c_ref = 1.0;  ///< |c0|_inf
  double n_ref = 1.0;  ///< |n0|_inf

  double c_floor() const { return floor_of(c_ref); }
  double n_floor() const { return floor_of(n_ref); }

  static AuditScales from(const ScalarField& n0, const ScalarField& c0) {
    return {c0.max_abs(), n0.max_abs()};
  }

 private:
  static double floor_of(double ref) {
    return std::max(1e-12 * ref, std::numeric_limits<double>::min());
  }
};

namespace detail {

template <class F>
double cell_sum(const Grid& g, F&& f) {
  double s = 0.0;
  for_each_cell(g, [&](int i, int j, int k) { s += f(i, j, k); });
  return s * g.cell_volume();
}

inline double sq_norm(const std::array<ScalarField, 3>& v, int d, int i, int j, int k) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) s += v[a](i, j, k) * v[a](i, j, k);
  return s;
}

inline double frobenius_sq(const std::array<std::array<ScalarField, 3>, 3>& H, int d, int i, int j,
                           int k) {
  double s = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) s += H[a][b](i, j, k) * H[a][b](i, j, k);
  return s;
}

}  // namespace detail

/// Evaluates every functional of EnergyReport on one state.
inline EnergyReport evaluate(const SimState& s, const FluxSpec& spec, const AuditScales& scales) {
  const Grid& g = s.n.grid();
  const int d = g.ndim();
  const double m = spec.m, eps = spec.epsilon;
  const double c_floor = scales.c_floor(), n_floor = scales.n_floor();
  EnergyReport r;
  r.t = s.t;

  long c_guard = 0, n_guard = 0;
  for_each_cell(g, [&](int i, int j, int k) {
    if (s.c(i, j, k) < c_floor) ++c_guard;
    if (s.n(i, j, k) < n_floor) ++n_guard;
  });
  r.c_guard_cells = static_cast<double>(c_guard);
  r.n_guard_cells = static_cast<double>(n_guard);

  auto cg = [&](int i, int j, int k) { return std::max(s.c(i, j, k), c_floor); };
  auto np = [&](int i, int j, int k) { return std::max(s.n(i, j, k), 0.0); };

  const auto gc = cell_gradient(s.c);
  const auto Hc = hessian(s.c);
  const ScalarField ln_c = s.c.map([&](double v) { return std::log(std::max(v, c_floor)); });
  const auto Hl = hessian(ln_c);
  const auto gn = cell_gradient(s.n);
  const auto gw = cell_gradient(s.n.map([&](double v) { return std::pow(std::max(v, 0.0) + eps, m); }));
  const auto gv =
      cell_gradient(s.n.map([&](double v) { return std::pow(std::max(v, 0.0) + eps, 0.5 * m); }));

  r.mass_n = integrate(s.n);
  r.linf_c = s.c.max_abs();
  r.fisher_c = detail::cell_sum(g, [&](int i, int j, int k) {
    return detail::sq_norm(gc, d, i, j, k) / cg(i, j, k);
  });
  r.entropy_n = detail::cell_sum(g, [&](int i, int j, int k) {
    const double v = np(i, j, k);
    return v > 0.0 ? v * std::log(v) : 0.0;
  });
  r.ke_u = kinetic_energy(s.u);
  r.lm_n = detail::cell_sum(g, [&](int i, int j, int k) { return std::pow(np(i, j, k), m); });
  r.grad_nm_l2 = detail::cell_sum(g, [&](int i, int j, int k) { return detail::sq_norm(gw, d, i, j, k); });
  r.grad_sqrt_n = detail::cell_sum(g, [&](int i, int j, int k) {
    return detail::sq_norm(gn, d, i, j, k) / std::max(np(i, j, k) + eps, n_floor);
  });
  r.lap_c_l2 = detail::cell_sum(g, [&](int i, int j, int k) {
    double lap = 0.0;
    for (int a = 0; a < d; ++a) lap += Hc[a][a](i, j, k);
    return lap * lap;
  });
  r.grad_c_l4 = detail::cell_sum(g, [&](int i, int j, int k) {
    const double q = detail::sq_norm(gc, d, i, j, k);
    return q * q;
  });
  r.d_hess_ln_c = detail::cell_sum(g, [&](int i, int j, int k) {
    return cg(i, j, k) * detail::frobenius_sq(Hl, d, i, j, k);
  });
  r.d_cross = detail::cell_sum(g, [&](int i, int j, int k) {
    return np(i, j, k) / cg(i, j, k) * detail::sq_norm(gc, d, i, j, k);
  });
  r.d_grad_nm_half = detail::cell_sum(g, [&](int i, int j, int k) {
    const double v = np(i, j, k);
    return (v + eps) / std::max(v, n_floor) * detail::sq_norm(gv, d, i, j, k);
  });
  r.d_grad_u = velocity_gradient_energy(s.u);
  r.linf_n = s.n.max_abs();
  double gc_max = 0.0;
  for_each_cell(g, [&](int i, int j, int k) {
    gc_max = std::max(gc_max, std::sqrt(detail::sq_norm(gc, d, i, j, k)));
  });
  r.w1inf_c = r.linf_c + gc_max;
  r.w1inf_u = s.u.max_abs() + velocity_gradient_max(s.u);
  r.min_n = s.n.min();
  r.min_c = s.c.min();
  if (spec.chi > 0.0) {
    r.lyapunov_f = r.fisher_c + 2.0 / spec.chi * r.entropy_n + 2.0 * r.ke_u;
    r.lyapunov_d = r.d_hess_ln_c + r.d_cross + 7.0 / (m * spec.chi) * r.d_grad_nm_half + r.d_grad_u;
  } else {
    r.lyapunov_f = r.lyapunov_d = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Series claims

struct AuditThresholds {
  double mass_rel = 1e-10;
  double c_monotone_abs = 1e-12;
  double positivity_abs = 1e-12;
  double sup_slack = 0.05;
  double window_factor = 2.0;
  double window_start = 1.0;   ///< first window is [window_start, window_start + window_length]
  double window_length = 1.0;
  std::vector<std::string> sup_functionals = {"linf_n", "fisher_c", "entropy_n", "ke_u", "grad_nm_l2"};
  std::vector<std::string> window_functionals = {"d_hess_ln_c", "d_cross", "d_grad_u"};
};

enum class Claim { mass, oxygen_monotone, positivity, sup_bounded, dissipation_windows };

inline const std::vector<Claim>& all_claims() {
  static const std::vector<Claim> c = {Claim::mass, Claim::oxygen_monotone, Claim::positivity,
                                       Claim::sup_bounded, Claim::dissipation_windows};
  return c;
}

struct ClaimResult {
  std::string name;
  bool pass = true;
  std::vector<double> witness_times;  ///< times where the claim fails (first violation first)
  std::string detail;
};

struct AuditVerdict {
  std::vector<ClaimResult> results;

  bool all_pass() const {
    return std::all_of(results.begin(), results.end(), [](const ClaimResult& r) { return r.pass; });
  }
  const ClaimResult& result(const std::string& name) const {
    for (const auto& r : results)
      if (r.name == name) return r;
    throw InvalidArgument("audit: no result named '" + name + "'");
  }
};

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Integral of a piecewise-linear series over [a, b] (clipped to the data).
inline double window_integral(const std::vector<EnergyReport>& rs, ReportMember f, double a, double b) {
  double s = 0.0;
  for (std::size_t i = 1; i < rs.size(); ++i) {
    const double t0 = rs[i - 1].t, t1 = rs[i].t;
    const double lo = std::max(a, t0), hi = std::min(b, t1);
    if (!(hi > lo) || !(t1 > t0)) continue;
    auto at = [&](double t) {
      const double w = (t - t0) / (t1 - t0);
      return (1.0 - w) * rs[i - 1].*f + w * rs[i].*f;
    };
    s += 0.5 * (hi - lo) * (at(lo) + at(hi));
  }
  return s;
}

}  // namespace detail

/// Checks the claims on a time-ordered series of reports.
///   mass:                mass_n equal to the first value within mass_rel (relative)
///   oxygen_monotone:     linf_c non-increasing within c_monotone_abs
///   positivity:          min_n >= -positivity_abs
///   sup_bounded.<f>:     max over [T/2, T] <= max over [0, T/2] + slack |max over [0, T/2]|
///   dissipation_window.<f>: integral over [k, k+1] (k >= window_start) within
///                        window_factor of the first window
inline AuditVerdict audit_series(const std::vector<EnergyReport>& rs,
                                 const std::vector<Claim>& claims = all_claims(),
                                 const AuditThresholds& th = {}) {
  if (rs.size() < 8)
    throw InsufficientData("audit: need at least 8 reports, got " + std::to_string(rs.size()));
  for (std::size_t i = 1; i < rs.size(); ++i)
    if (!(rs[i].t >= rs[i - 1].t)) throw InvalidArgument("audit: reports are not time-ordered");

  AuditVerdict v;
  const double T0 = rs.front().t, T = rs.back().t;
  for (Claim claim : claims) {
    switch (claim) {
      case Claim::mass: {
        ClaimResult r{"mass", true, {}, {}};
        const double m0 = rs.front().mass_n;
        double worst = 0.0;
        for (const auto& e : rs) {
          const double rel = std::abs(e.mass_n - m0) / std::max(std::abs(m0), 1e-300);
          worst = std::max(worst, rel);
          if (rel > th.mass_rel) {
            r.pass = false;
            r.witness_times.push_back(e.t);
          }
        }
        r.detail = "max relative drift " + detail::fmt(worst);
        v.results.push_back(std::move(r));
        break;
      }
      case Claim::oxygen_monotone: {
        ClaimResult r{"oxygen_monotone", true, {}, {}};
        double worst = 0.0;
        for (std::size_t i = 1; i < rs.size(); ++i) {
          const double rise = rs[i].linf_c - rs[i - 1].linf_c;
          worst = std::max(worst, rise);
          if (rise > th.c_monotone_abs) {
            r.pass = false;
            r.witness_times.push_back(rs[i].t);
          }
        }
        r.detail = "largest increase " + detail::fmt(worst);
        v.results.push_back(std::move(r));
        break;
      }
      case Claim::positivity: {
        ClaimResult r{"positivity", true, {}, {}};
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& e : rs) {
          lo = std::min(lo, e.min_n);
          if (e.min_n < -th.positivity_abs) {
            r.pass = false;
            r.witness_times.push_back(e.t);
          }
        }
        r.detail = "min n " + detail::fmt(lo);
        v.results.push_back(std::move(r));
        break;
      }
      case Claim::sup_bounded: {
        const double half = T0 + 0.5 * (T - T0);
        for (const auto& name : th.sup_functionals) {
          const ReportMember f = report_member(name);
          ClaimResult r{"sup_bounded." + name, true, {}, {}};
          double early = -std::numeric_limits<double>::infinity();
          for (const auto& e : rs)
            if (e.t <= half) early = std::max(early, e.*f);
          const double bound = early + th.sup_slack * std::abs(early);
          double late = -std::numeric_limits<double>::infinity();
          for (const auto& e : rs) {
            if (e.t < half) continue;
            late = std::max(late, e.*f);
            if (!(e.*f <= bound)) {
              r.pass = false;
              r.witness_times.push_back(e.t);
            }
          }
          r.detail = "max [0,T/2] " + detail::fmt(early) + ", max [T/2,T] " + detail::fmt(late);
          v.results.push_back(std::move(r));
        }
        break;
      }
      case Claim::dissipation_windows: {
        for (const auto& name : th.window_functionals) {
          const ReportMember f = report_member(name);
          ClaimResult r{"dissipation_window." + name, true, {}, {}};
          const double a0 = th.window_start;
          if (T < a0 + th.window_length) {
            r.pass = false;
            r.detail = "horizon shorter than the first window";
            v.results.push_back(std::move(r));
            continue;
          }
          const double first = detail::window_integral(rs, f, a0, a0 + th.window_length);
          double worst = 0.0;
          for (double a = a0; a + th.window_length <= T + 1e-12; a += th.window_length) {
            const double w = detail::window_integral(rs, f, a, a + th.window_length);
            worst = std::max(worst, w);
            if (!(w <= th.window_factor * first)) {
              r.pass = false;
              r.witness_times.push_back(a + th.window_length);
            }
          }
          r.detail = "first window " + detail::fmt(first) + ", largest " + detail::fmt(worst);
          v.results.push_back(std::move(r));
        }
        break;
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Discrete calculus checks with weights h(s) = s^p

struct SidePair {
  double lhs = 0.0;
  double rhs = 0.0;
};

namespace detail {

inline void require_positive(const ScalarField& phi, const char* what) {
  if (!phi.all_finite() || !(phi.min() > 0.0))
    throw InvalidArgument(std::string(what) + ": phi must be finite and > 0");
}

}  // namespace detail

/// Both sides of the weighted integration-by-parts identity
///   int h'(phi)|grad phi|^2 Lap phi + 2/3 int h(phi)|Lap phi|^2
///     = 2/3 int h(phi)|D^2 phi|^2 - 1/3 int h''(phi)|grad phi|^4
/// (the boundary term vanishes on flat Neumann walls).
inline SidePair hessian_identity_sides(const ScalarField& phi_in, double p) {
  detail::require_positive(phi_in, "hessian_identity_sides");
  ScalarField phi = apply_scalar_bc(phi_in);
  const Grid& g = phi.grid();
  const int d = g.ndim();
  const auto gp = cell_gradient(phi);
  const auto H = hessian(phi);
  SidePair out;
  for_each_cell(g, [&](int i, int j, int k) {
    const double s = phi(i, j, k);
    const double h = std::pow(s, p);
    const double h1 = p * std::pow(s, p - 1.0);
    const double h2 = p * (p - 1.0) * std::pow(s, p - 2.0);
    const double q = detail::sq_norm(gp, d, i, j, k);
    double lap = 0.0;
    for (int a = 0; a < d; ++a) lap += H[a][a](i, j, k);
    out.lhs += h1 * q * lap + 2.0 / 3.0 * h * lap * lap;
    out.rhs += 2.0 / 3.0 * h * detail::frobenius_sq(H, d, i, j, k) - 1.0 / 3.0 * h2 * q * q;
  });
  out.lhs *= g.cell_volume();
  out.rhs *= g.cell_volume();
  return out;
}

/// Both sides of the weighted gradient bound
///   int h'(phi)/h(phi)^3 |grad phi|^4 <= (2 + sqrt N)^2 int h(phi)/h'(phi) |D^2 theta(phi)|^2,
/// theta' = 1/h, N the dimension. Requires h' > 0 on the range, i.e. p > 0.
inline SidePair gradient_quartic_sides(const ScalarField& phi_in, double p) {
  detail::require_positive(phi_in, "gradient_quartic_sides");
  if (!(p > 0.0)) throw InvalidArgument("gradient_quartic_sides: need p > 0 so that h' > 0");
  ScalarField phi = apply_scalar_bc(phi_in);
  const Grid& g = phi.grid();
  const int d = g.ndim();
  const ScalarField theta = phi.map([p](double s) {
    return p == 1.0 ? std::log(s) : (std::pow(s, 1.0 - p) - 1.0) / (1.0 - p);
  });
  const auto gp = cell_gradient(phi);
  const auto Ht = hessian(theta);
  const double constant = (2.0 + std::sqrt(static_cast<double>(d))) * (2.0 + std::sqrt(static_cast<double>(d)));
  SidePair out;
  for_each_cell(g, [&](int i, int j, int k) {
    const double s = phi(i, j, k);
    const double h = std::pow(s, p);
    const double h1 = p * std::pow(s, p - 1.0);
    const double q = detail::sq_norm(gp, d, i, j, k);
    out.lhs += h1 / (h * h * h) * q * q;
    out.rhs += h / h1 * detail::frobenius_sq(Ht, d, i, j, k);
  });
  out.lhs *= g.cell_volume();
  out.rhs *= constant * g.cell_volume();
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline void write_audit_header(std::ostream& os) {
  os << "# cstk-audit v" << kAuditCsvVersion << "\n";
  bool first = true;
  for (const auto& c : report_columns()) {
    os << (first ? "" : ",") << c.name;
    first = false;
  }
  os << "\n";
}

inline void write_audit_row(std::ostream& os, const EnergyReport& r) {
  char buf[40];
  bool first = true;
  for (const auto& c : report_columns()) {
    std::snprintf(buf, sizeof buf, "%.17g", r.*c.member);
    os << (first ? "" : ",") << buf;
    first = false;
  }
  os << "\n";
}

inline std::vector<EnergyReport> read_audit_csv(std::istream& is) {
  std::string line;
  std::vector<EnergyReport> out;
  bool header = false;
  const auto& cols = report_columns();
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream ls(line);
    EnergyReport r;
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= cols.size()) throw FormatError("audit csv: too many columns");
      r.*cols[c].member = std::strtod(cell.c_str(), nullptr);
      ++c;
    }
    if (c != cols.size()) throw FormatError("audit csv: expected " + std::to_string(cols.size()) + " columns");
    out.push_back(r);
  }
  return out;
}

/// Human-readable summary followed by a key=value block.
inline void write_verdict(std::ostream& os, const AuditVerdict& v) {
  os << "audit verdict: " << (v.all_pass() ? "PASS" : "FAIL") << "\n";
  for (const auto& r : v.results) {
    os << "  " << (r.pass ? "pass" : "FAIL") << "  " << r.name << "  (" << r.detail << ")";
    if (!r.witness_times.empty()) os << " first violation at t=" << detail::fmt(r.witness_times.front());
    os << "\n";
  }
  os << "\n[verdict]\n";
  os << "all_pass=" << (v.all_pass() ? 1 : 0) << "\n";
  for (const auto& r : v.results) {
    os << r.name << ".pass=" << (r.pass ? 1 : 0) << "\n";
    os << r.name << ".violations=" << r.witness_times.size() << "\n";
    if (!r.witness_times.empty()) os << r.name << ".first_witness=" << detail::fmt(r.witness_times.front()) << "\n";
  }
}

}  // namespace cstk
