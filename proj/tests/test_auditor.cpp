#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cstk/auditor.hpp"

using namespace cstk;
using std::numbers::pi;

namespace {

SimState state_of(const ScalarField& n, const ScalarField& c) {
  return {n, c, VectorField(n.grid()), ScalarField(n.grid()), 0.0};
}

ScalarField random_positive(const Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  ScalarField f(g);
  for_each_cell(g, [&](int i, int j, int k) { f(i, j, k) = d(rng); });
  f.fill_ghosts();
  return f;
}

std::vector<EnergyReport> constant_series(int count) {
  std::vector<EnergyReport> rs(count);
  for (int i = 0; i < count; ++i) {
    rs[i].t = 0.5 * i;
    rs[i].mass_n = 1.0;
    rs[i].linf_c = 1.0;
    rs[i].linf_n = 1.0;
    rs[i].d_hess_ln_c = rs[i].d_cross = rs[i].d_grad_u = 0.25;
  }
  return rs;
}

double simpson(double a, double b, int n, const std::function<double(double)>& f) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Evaluate, Constants) {
  Grid g({16, 16}, {1.0, 1.0});
  const auto r = evaluate(state_of(ScalarField(g, 1.0), ScalarField(g, 1.0)), FluxSpec{}, {});
  EXPECT_DOUBLE_EQ(r.mass_n, 1.0);
  EXPECT_EQ(r.entropy_n, 0.0);
  EXPECT_EQ(r.fisher_c, 0.0);
  EXPECT_EQ(r.ke_u, 0.0);
  EXPECT_EQ(r.d_grad_u, 0.0);
  EXPECT_EQ(r.c_guard_cells, 0.0);
  const auto e = evaluate(state_of(ScalarField(g, std::numbers::e), ScalarField(g, 1.0)), FluxSpec{}, {});
  EXPECT_NEAR(e.entropy_n, std::numbers::e, 1e-14);
}

TEST(Evaluate, FisherAgainstQuadrature) {
  // c = 1 + cos(pi x / L) / 2 on a 64-cell axis; the integrand is uniform in y
  const double L = 2.0;
  Grid g({64, 4}, {L, 0.5});
  const auto c = ScalarField::sample(g, [&](double x, double, double) { return 1.0 + 0.5 * std::cos(pi * x / L); });
  const auto r = evaluate(state_of(ScalarField(g, 1.0), c), FluxSpec{}, {});
  const double exact = 0.5 * simpson(0.0, L, 200000, [&](double x) {
    const double d = -0.5 * pi / L * std::sin(pi * x / L);
    return d * d / (1.0 + 0.5 * std::cos(pi * x / L));
  });
  EXPECT_NEAR(r.fisher_c, exact, 0.01 * exact);
}

TEST(Evaluate, ScalingResponses) {
  Grid g({20, 20}, {1.0, 1.0});
  const auto n = random_positive(g, 1).map([](double v) { return v + 0.1; });
  const auto c = random_positive(g, 2).map([](double v) { return v + 0.1; });
  const auto base = evaluate(state_of(n, c), FluxSpec{}, {});
  for (double a : {2.0, 10.0}) {
    const auto sc = evaluate(state_of(n, c.map([a](double v) { return a * v; })), FluxSpec{}, {});
    EXPECT_NEAR(sc.fisher_c, a * base.fisher_c, 1e-12 * a * base.fisher_c);
    const auto sn = evaluate(state_of(n.map([a](double v) { return a * v; }), c), FluxSpec{}, {});
    // int (a n) ln(a n) = a int n ln n + a ln a int n
    const double expect = a * base.entropy_n + a * std::log(a) * base.mass_n;
    EXPECT_NEAR(sn.entropy_n, expect, 1e-12 * std::abs(expect));
  }
}

TEST(Evaluate, GuardAccounting) {
  Grid g({16, 16}, {1.0, 1.0});
  AuditScales sc{1.0, 1.0};
  auto c = random_positive(g, 3).map([&](double v) { return 10.0 * sc.c_floor() + v; });
  auto r = evaluate(state_of(ScalarField(g, 1.0), c), FluxSpec{}, sc);
  EXPECT_EQ(r.c_guard_cells, 0.0);
  c(3, 3) = 0.0;
  c(4, 4) = 0.0;
  c.fill_ghosts();
  r = evaluate(state_of(ScalarField(g, 1.0), c), FluxSpec{}, sc);
  EXPECT_EQ(r.c_guard_cells, 2.0);
  EXPECT_TRUE(std::isfinite(r.fisher_c));
  EXPECT_TRUE(std::isfinite(r.d_hess_ln_c));
}

TEST(Evaluate, PureAndSigned) {
  for (const Grid& g : {Grid({12, 14}, {1.0, 2.0}), Grid({8, 8, 8}, {1.0, 1.0, 1.0})}) {
    SimState s = state_of(random_positive(g, 4), random_positive(g, 5));
    s.u = VectorField::sample(g, [](int c, double x, double y, double z) { return std::sin(3 * x + c) * y * (1 - z); });
    s.u.zero_boundary();
    const FluxSpec spec{1.3, 0.7, 0.05};
    const auto a = evaluate(s, spec, {}), b = evaluate(s, spec, {});
    EXPECT_TRUE(a == b || (std::isnan(a.lyapunov_f) && std::isnan(b.lyapunov_f)));
    for (double v : {a.mass_n, a.lm_n, a.ke_u, a.grad_nm_l2, a.grad_sqrt_n, a.lap_c_l2, a.grad_c_l4, a.fisher_c,
                     a.d_hess_ln_c, a.d_cross, a.d_grad_nm_half, a.d_grad_u, a.w1inf_c, a.w1inf_u})
      EXPECT_GE(v, 0.0);
    EXPECT_GE(a.entropy_n, -g.volume() / std::numbers::e);
  }
}

TEST(Evaluate, LyapunovCombination) {
  Grid g({16, 16}, {1.0, 1.0});
  const auto s = state_of(random_positive(g, 6), random_positive(g, 7).map([](double v) { return v + 0.5; }));
  const FluxSpec spec{1.5, 2.0, 0.0};
  const auto r = evaluate(s, spec, {});
  EXPECT_NEAR(r.lyapunov_f, r.fisher_c + r.entropy_n + 2 * r.ke_u, 1e-12 * std::abs(r.lyapunov_f));
  EXPECT_NEAR(r.lyapunov_d, r.d_hess_ln_c + r.d_cross + 7.0 / 3.0 * r.d_grad_nm_half + r.d_grad_u,
              1e-12 * r.lyapunov_d);
  EXPECT_TRUE(std::isnan(evaluate(s, FluxSpec{1.5, 0.0, 0.0}, {}).lyapunov_f));
}

TEST(AuditSeries, ConstantSeriesPasses) {
  const auto v = audit_series(constant_series(30));
  EXPECT_TRUE(v.all_pass());
  EXPECT_EQ(v.results.size(), 3u + 5u + 3u);
}

TEST(AuditSeries, NeedsEightReports) {
  EXPECT_THROW(audit_series(constant_series(7)), InsufficientData);
  EXPECT_NO_THROW(audit_series(constant_series(8), {Claim::mass}));
}

TEST(AuditSeries, MassDrift) {
  auto rs = constant_series(20);
  for (int i = 6; i < 20; ++i) rs[i].mass_n = 1.0 + 1e-3;
  const auto v = audit_series(rs, {Claim::mass});
  EXPECT_FALSE(v.result("mass").pass);
  ASSERT_FALSE(v.result("mass").witness_times.empty());
  EXPECT_EQ(v.result("mass").witness_times.front(), rs[6].t);
}

TEST(AuditSeries, OxygenRise) {
  auto rs = constant_series(20);
  rs[9].linf_c = 1.0 + 1e-9;
  const auto v = audit_series(rs, {Claim::oxygen_monotone});
  EXPECT_FALSE(v.all_pass());
  EXPECT_EQ(v.result("oxygen_monotone").witness_times.front(), rs[9].t);
}

TEST(AuditSeries, SupGrowthAndNegativeValues) {
  auto rs = constant_series(21);
  rs[18].linf_n = 1.06;
  auto v = audit_series(rs, {Claim::sup_bounded});
  EXPECT_FALSE(v.result("sup_bounded.linf_n").pass);
  EXPECT_EQ(v.result("sup_bounded.linf_n").witness_times.front(), rs[18].t);
  rs[18].linf_n = 1.04;
  EXPECT_TRUE(audit_series(rs, {Claim::sup_bounded}).all_pass());
  // negative entropy: slack is relative to the magnitude
  for (auto& r : rs) r.entropy_n = -2.0;
  rs[15].entropy_n = -1.95;
  v = audit_series(rs, {Claim::sup_bounded});
  EXPECT_TRUE(v.result("sup_bounded.entropy_n").pass);
  rs[15].entropy_n = -1.85;
  v = audit_series(rs, {Claim::sup_bounded});
  EXPECT_FALSE(v.result("sup_bounded.entropy_n").pass);
}

TEST(AuditSeries, DissipationWindows) {
  auto rs = constant_series(21);  // t = 0 .. 10
  EXPECT_TRUE(audit_series(rs, {Claim::dissipation_windows}).all_pass());
  for (auto& r : rs)
    if (r.t > 6.0 && r.t < 8.0) r.d_cross = 5.0;
  const auto v = audit_series(rs, {Claim::dissipation_windows});
  EXPECT_FALSE(v.result("dissipation_window.d_cross").pass);
  EXPECT_TRUE(v.result("dissipation_window.d_grad_u").pass);
  // piecewise-linear integral of a unit plateau over a unit window
  EXPECT_NEAR(detail::window_integral(constant_series(21), &EnergyReport::d_cross, 1.0, 2.0), 0.25, 1e-15);
}

TEST(AuditSeries, RejectsUnorderedAndUnknown) {
  auto rs = constant_series(10);
  std::swap(rs[2], rs[3]);
  EXPECT_THROW(audit_series(rs), InvalidArgument);
  AuditThresholds th;
  th.sup_functionals = {"nope"};
  EXPECT_THROW(audit_series(constant_series(10), {Claim::sup_bounded}, th), InvalidArgument);
}

namespace {

ScalarField mode_field(const Grid& g) {
  return ScalarField::sample(g, [](double x, double y, double) { return 1.0 + 0.5 * std::cos(pi * x) * std::cos(pi * y); });
}

double relative_gap(const SidePair& s) { return std::abs(s.lhs - s.rhs) / std::abs(s.lhs); }

}  // namespace

TEST(HessianIdentity, ConstantField) {
  Grid g({16, 16}, {1.0, 1.0});
  const auto s = hessian_identity_sides(ScalarField(g, 2.0), -1.0);
  EXPECT_EQ(s.lhs, 0.0);
  EXPECT_EQ(s.rhs, 0.0);
  EXPECT_THROW(hessian_identity_sides(ScalarField(g, 0.0), 1.0), InvalidArgument);
}

TEST(HessianIdentity, GapShrinksUnderRefinement) {
  for (double p : {0.0, -1.0, 2.0}) {
    std::vector<double> gaps;
    for (int n : {32, 64, 128}) {
      Grid g({n, n}, {1.0, 1.0});
      gaps.push_back(relative_gap(hessian_identity_sides(mode_field(g), p)));
    }
    for (std::size_t r = 1; r < gaps.size(); ++r) EXPECT_GE(gaps[r - 1] / gaps[r], 1.5) << "p = " << p;
    EXPECT_LT(gaps.back(), 0.02) << "p = " << p;
  }
}

TEST(GradientQuartic, ConstantField) {
  Grid g({16, 16}, {1.0, 1.0});
  const auto s = gradient_quartic_sides(ScalarField(g, 2.0), 1.0);
  EXPECT_EQ(s.lhs, 0.0);
  EXPECT_EQ(s.rhs, 0.0);
  EXPECT_THROW(gradient_quartic_sides(ScalarField(g, 2.0), -1.0), InvalidArgument);
}

TEST(GradientQuartic, HoldsForBumpAndMode) {
  for (int n : {32, 64, 128}) {
    Grid g({n, n}, {1.0, 1.0});
    const auto bump = ScalarField::sample(g, [](double x, double y, double) {
      return 0.2 + std::exp(-30 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
    });
    const auto b = gradient_quartic_sides(bump, 1.0);
    EXPECT_LE(b.lhs, 1.05 * b.rhs);
    const auto mode = ScalarField::sample(g, [](double x, double, double) { return 2.0 + std::cos(pi * x); });
    const auto m = gradient_quartic_sides(mode, 2.0);
    EXPECT_LE(m.lhs, 1.05 * m.rhs);
    EXPECT_GT(m.lhs, 0.0);
  }
  Grid g3({16, 16, 16}, {1.0, 1.0, 1.0});
  const auto f3 = ScalarField::sample(g3, [](double x, double y, double z) {
    return 1.5 + std::cos(pi * x) * std::cos(pi * y) * std::cos(pi * z);
  });
  const auto s3 = gradient_quartic_sides(f3, 1.0);
  EXPECT_LE(s3.lhs, 1.05 * s3.rhs);
}

TEST(AuditCsv, RoundTripAndHeader) {
  Grid g({12, 12}, {1.0, 1.0});
  const auto s = state_of(random_positive(g, 8), random_positive(g, 9).map([](double v) { return v + 0.1; }));
  std::vector<EnergyReport> rs;
  for (int i = 0; i < 3; ++i) {
    auto r = evaluate(s, FluxSpec{}, {});
    r.t = 0.1 * i;
    rs.push_back(r);
  }
  std::stringstream out;
  write_audit_header(out);
  for (const auto& r : rs) write_audit_row(out, r);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("# cstk-audit v1\nt,mass_n,linf_c,fisher_c,entropy_n,ke_u,lm_n,grad_nm_l2,", 0), 0u);
  std::stringstream in(text);
  const auto back = read_audit_csv(in);
  ASSERT_EQ(back.size(), rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_TRUE(back[i] == rs[i]);
}

TEST(Verdict, KeyValueBlock) {
  auto rs = constant_series(20);
  rs[5].mass_n = 2.0;
  std::stringstream out;
  write_verdict(out, audit_series(rs));
  const std::string text = out.str();
  EXPECT_NE(text.find("audit verdict: FAIL"), std::string::npos);
  EXPECT_NE(text.find("[verdict]\nall_pass=0\n"), std::string::npos);
  EXPECT_NE(text.find("mass.pass=0\n"), std::string::npos);
  EXPECT_NE(text.find("mass.first_witness=2.5\n"), std::string::npos);
  EXPECT_NE(text.find("positivity.pass=1\n"), std::string::npos);
}
