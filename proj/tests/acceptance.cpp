// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cstk/config.hpp"
#include "cstk/experiments.hpp"

using namespace cstk;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path workdir() {
  static const fs::path p = [] {
    const fs::path d = fs::temp_directory_path() / "cstk_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

RunConfig blob_config(int dim, int cells, double m, double t_end) {
  RunConfig c;
  c.dims.assign(dim, cells);
  c.lengths.assign(dim, 4.0);
  c.gravity_direction.assign(dim, 0.0);
  c.gravity_direction[dim - 1] = -1.0;
  c.flux = FluxSpec{m, 1.0, 0.01};
  c.ic.sigma = 0.4;
  c.ic.mass = 2.0;
  c.t_end = t_end;
  c.audit_cadence = 0.1;
  return c;
}

// Per-step invariants (criteria 1-3) over two short 64^2 runs.
struct StepInvariants {
  double mass_rel = 0.0;
  double c_excess = -1.0;
  double c_low = 0.0;
  double n_low = 0.0;
  long steps = 0;
  bool completed = true;
};

const StepInvariants& step_invariants() {
  static const StepInvariants inv = [] {
    StepInvariants out;
    RunConfig blob = blob_config(2, 64, 1.2, 1.0);
    RunConfig noisy = blob;
    noisy.ic.name = "random-perturbed";
    noisy.ic.amplitude = 0.5;
    noisy.ic.u_amplitude = 0.5;
    noisy.flux.chi = 2.0;
    for (const RunConfig& cfg : {blob, noisy}) {
      const auto ic = make_initial(cfg.grid(), cfg.ic);
      const double mass0 = integrate(ic.n0);
      const double cmax0 = ic.c0.max();
      RunHooks h;
      h.on_step = [&](const SimState& s, double) {
        ++out.steps;
        out.mass_rel = std::max(out.mass_rel, std::abs(integrate(s.n) - mass0) / mass0);
        out.c_excess = std::max(out.c_excess, s.c.max() - cmax0);
        out.c_low = std::min(out.c_low, s.c.min());
        out.n_low = std::min(out.n_low, s.n.min());
      };
      const auto r = run(ic, cfg.sim_params(), h);
      out.completed = out.completed && r.status == RunStatus::completed;
    }
    return out;
  }();
  return inv;
}

Outcome mass_conservation() {
  const auto& s = step_invariants();
  return {s.completed && s.steps > 0 && s.mass_rel <= 1e-10,
          "max relative drift " + num(s.mass_rel) + " over " + std::to_string(s.steps) + " steps"};
}

Outcome oxygen_maximum_principle() {
  const auto& s = step_invariants();
  return {s.completed && s.c_excess <= 1e-12 && s.c_low >= -1e-12,
          "max(c) - max(c0) = " + num(s.c_excess) + ", min c = " + num(s.c_low)};
}

Outcome density_positivity() {
  const auto& s = step_invariants();
  return {s.completed && s.n_low >= -1e-12, "min n = " + num(s.n_low)};
}

// Long runs for criteria 4-5.
const std::vector<RunOutcome>& long_runs() {
  static const std::vector<RunOutcome> runs = [] {
    const std::vector<RunConfig> cfgs = {blob_config(2, 64, 1.05, 10.0), blob_config(2, 64, 1.1, 10.0),
                                         blob_config(2, 64, 1.2, 10.0), blob_config(3, 32, 1.1, 10.0)};
    std::vector<RunOutcome> out(cfgs.size());
    detail::parallel_for(static_cast<int>(cfgs.size()), static_cast<int>(cfgs.size()), [&](int i) {
      out[i] = run_to_directory(cfgs[i], workdir() / ("long_" + std::to_string(i)));
    });
    return out;
  }();
  return runs;
}

const char* kLongNames[] = {"m=1.05 64^2", "m=1.1 64^2", "m=1.2 64^2", "m=1.1 32^3"};

Outcome claims_with_prefix(const std::string& prefix) {
  Outcome o{true, ""};
  const auto& runs = long_runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    int checked = 0, failed = 0;
    for (const auto& r : runs[i].verdict.results) {
      if (r.name == "completed") {
        o.pass = false;
        o.detail += std::string(kLongNames[i]) + " did not complete; ";
      }
      if (r.name.rfind(prefix, 0) != 0) continue;
      ++checked;
      if (!r.pass) {
        ++failed;
        o.detail += std::string(kLongNames[i]) + " " + r.name + " (" + r.detail + "); ";
      }
    }
    if (checked == 0 || failed > 0) o.pass = false;
  }
  if (o.pass) o.detail = "4 runs to t=10, all " + prefix + "* claims hold";
  return o;
}

Outcome long_run_boundedness() { return claims_with_prefix("sup_bounded."); }

Outcome dissipation_windows() { return claims_with_prefix("dissipation_window."); }

Outcome operator_convergence() {
  Outcome o{true, ""};
  for (const char* preset : {"heat-mode", "barenblatt", "stokes-manufactured"}) {
    const auto c = run_convergence(preset, 3);
    o.pass = o.pass && c.pass;
    o.detail += std::string(preset) + " order " + num(c.order) + (c.pass ? "" : " FAIL");
    for (const auto& [name, ok] : c.checks)
      o.detail += ", " + name + (ok ? " ok" : " FAIL") + " (" + num(c.rows.back().aux) + ")";
    o.detail += "; ";
  }
  return o;
}

double relative_gap(const SidePair& s) {
  return std::abs(s.lhs - s.rhs) / std::max(std::abs(s.lhs), std::abs(s.rhs));
}

Outcome calculus_identities() {
  struct Case {
    const char* name;
    int dim;
    std::vector<int> cells;
    std::function<double(double, double, double)> f;
  };
  const std::vector<Case> cases = {
      {"2+cos(pi x)cos(pi y)", 2, {32, 64},
       [](double x, double y, double) { return 2.0 + std::cos(pi * x) * std::cos(pi * y); }},
      {"1.5+0.5cos(2 pi x)+0.3cos(pi y)", 2, {32, 64},
       [](double x, double y, double) { return 1.5 + 0.5 * std::cos(2 * pi * x) + 0.3 * std::cos(pi * y); }},
      {"1.5+cos(pi x)cos(pi y)cos(pi z)", 3, {16, 32},
       [](double x, double y, double z) { return 1.5 + std::cos(pi * x) * std::cos(pi * y) * std::cos(pi * z); }},
  };
  Outcome o{true, ""};
  for (const auto& c : cases) {
    std::vector<double> gaps;
    for (int n : c.cells) {
      const Grid g = c.dim == 2 ? Grid({n, n}, {1.0, 1.0}) : Grid({n, n, n}, {1.0, 1.0, 1.0});
      const auto phi = ScalarField::sample(g, c.f);
      gaps.push_back(relative_gap(hessian_identity_sides(phi, -1.0)));
      const auto q = gradient_quartic_sides(phi, 1.0);
      if (!(q.lhs <= 1.05 * q.rhs)) {
        o.pass = false;
        o.detail += std::string(c.name) + " quartic bound fails at " + std::to_string(n) + "; ";
      }
    }
    if (!(gaps[1] < gaps[0])) o.pass = false;
    o.detail += std::string(c.name) + " gap " + num(gaps[0]) + " -> " + num(gaps[1]) + "; ";
  }
  return o;
}

Outcome projection() {
  const Grid g({64, 64}, {1.0, 1.0});
  StokesWorkspace ws;
  double div = 0.0, idem = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    IcPreset pre;
    pre.name = "random-perturbed";
    pre.seed = seed;
    const auto ic = make_initial(g, pre);
    VectorField v(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int c = 0; c < g.ndim(); ++c) v.for_each_face(c, [&](int i, int j, int k) { v(c, i, j, k) = u(rng); });
    v.zero_boundary();
    v += gradient(ic.n0);
    const auto p1 = project_div_free(v, ws);
    div = std::max(div, divergence(p1.field).max_abs());
    auto p2 = project_div_free(p1.field, ws);
    div = std::max(div, divergence(p2.field).max_abs());
    p2.field -= p1.field;
    idem = std::max(idem, p2.field.max_abs());
  }
  // every projection inside the Stokes solve of a 64^2 run
  RunConfig cfg = blob_config(2, 64, 1.2, 0.5);
  double run_div = 0.0;
  RunHooks h;
  h.on_step = [&](const SimState& s, double) { run_div = std::max(run_div, divergence(s.u).max_abs()); };
  const auto r = run(make_initial(cfg.grid(), cfg.ic), cfg.sim_params(), h);
  const bool pass = div <= 1e-10 && run_div <= 1e-10 && idem <= 1e-10 && r.status == RunStatus::completed;
  return {pass, "max div " + num(std::max(div, run_div)) + ", |P(Pv) - Pv| " + num(idem)};
}

Outcome epsilon_trend() {
  const auto o = sweep_epsilon(blob_config(2, 32, 1.2, 1.0), {0.1, 0.05, 0.025, 0.0125}, workdir() / "sweep", 4);
  std::string d = "distances";
  for (double v : o.distances) d += " " + num(v);
  return {o.decreasing, d};
}

Outcome determinism() {
  const RunConfig cfg = blob_config(2, 32, 1.2, 1.0);
  run_to_directory(cfg, workdir() / "det_a");
  run_to_directory(cfg, workdir() / "det_b");
  const auto a = slurp(workdir() / "det_a" / "audit.csv");
  const auto b = slurp(workdir() / "det_b" / "audit.csv");
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, identical=" + (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"mass conservation", mass_conservation},
      {"oxygen maximum principle", oxygen_maximum_principle},
      {"density positivity", density_positivity},
      {"long-run boundedness", long_run_boundedness},
      {"dissipation-window boundedness", dissipation_windows},
      {"operator convergence", operator_convergence},
      {"discrete calculus identities", calculus_identities},
      {"Helmholtz projection", projection},
      {"epsilon-limit trend", epsilon_trend},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("[%s] %2zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), sec);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
