#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cstk/config.hpp"
#include "cstk/experiments.hpp"

using namespace cstk;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cstk_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

const char* kSmallConfig =
    "# small blob\n"
    "grid.dims = 24, 24\n"
    "grid.lengths = 4, 4\n"
    "params.m = 1.2\n"
    "ic.sigma = 0.4\n"
    "ic.mass = 2\n"
    "run.t_end = 0.8\n";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct CliResult {
  int status;
  std::string output;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = std::string("\"") + CSTK_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const auto cfg = parse_config_text("");
  EXPECT_EQ(cfg, RunConfig{});
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesKeysCommentsAndLists) {
  const auto cfg = parse_config_text(
      "grid.dims = 16,12,8   # three axes\n"
      "grid.lengths = 2, 1.5, 1\n"
      "params.gravity_direction = 0, 0, -2\n"
      "params.gravity_magnitude = 3\n"
      "params.mobility_mean = harmonic\n"
      "ic.center = 1, 0.5, 0.5\n"
      "run.seed = 42\n");
  EXPECT_EQ(cfg.dims, (std::vector<int>{16, 12, 8}));
  EXPECT_EQ(cfg.lengths, (std::vector<double>{2.0, 1.5, 1.0}));
  EXPECT_EQ(cfg.flux.mean, MobilityMean::harmonic);
  EXPECT_EQ(cfg.gravity(), (std::array<double, 3>{0.0, 0.0, -3.0}));
  EXPECT_EQ(cfg.ic.center[0], 1.0);
  EXPECT_EQ(cfg.ic.seed, 42u);
  const auto p = cfg.sim_params();
  const auto gp = gradient(p.phi);
  EXPECT_NEAR(gp(2, 3, 3, 4), -3.0, 1e-12);
}

TEST(Config, ErrorsCarryLineContext) {
  EXPECT_NE(error_of("params.m = 1.5\nparams.bogus = 1\n").find("t.cfg:2: unknown key 'params.bogus'"),
            std::string::npos);
  EXPECT_NE(error_of("\n\nm = 2\n").find("t.cfg:3:"), std::string::npos);
  EXPECT_NE(error_of("solver.m = 2\n").find("prefixes"), std::string::npos);
  EXPECT_NE(error_of("params.m 2\n").find("t.cfg:1: expected key = value"), std::string::npos);
  EXPECT_NE(error_of("params.m = 2\nparams.m = 3\n").find("repeats line 1"), std::string::npos);
  EXPECT_NE(error_of("params.chi = lots\n").find("expected a number"), std::string::npos);
  EXPECT_NE(error_of("params.chi =\n").find("no value"), std::string::npos);
  EXPECT_NE(error_of("grid.dims = 8, x\n").find("expected an integer"), std::string::npos);
}

TEST(Config, RevalidatesModelConstraints) {
  const auto m = error_of("params.m = 0.9\n");
  EXPECT_NE(m.find("m > 1"), std::string::npos);
  EXPECT_NE(m.find("t.cfg:1:"), std::string::npos);
  EXPECT_NE(error_of("params.epsilon = 2\n").find("epsilon"), std::string::npos);
  EXPECT_NE(error_of("params.dt_min = 1\n").find("dt_min"), std::string::npos);
  EXPECT_NE(error_of("grid.dims = 3, 8\n").find(">= 4 cells"), std::string::npos);
  EXPECT_NE(error_of("grid.dims = 8, 8, 8\ngrid.lengths = 1, 1, 1\n").find("gravity_direction"), std::string::npos);
  EXPECT_NE(error_of("params.gravity_direction = 0, 0\n").find("nonzero"), std::string::npos);
  EXPECT_NE(error_of("run.cadence = 0\n").find("run.cadence"), std::string::npos);
  EXPECT_NE(error_of("ic.preset = spiral\n").find("unknown preset"), std::string::npos);
  EXPECT_NE(error_of("ic.preset = random-perturbed\nic.amplitude = 2\n").find("amplitude"), std::string::npos);
  EXPECT_NO_THROW(parse_config_text("params.gravity_direction = 0, 0\nparams.gravity_magnitude = 0\n"));
}

TEST(Config, CanonicalTextRoundTrips) {
  // property: random admissible configurations survive to_text -> parse
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RunConfig c;
    const int d = trial % 3 == 0 ? 3 : 2;
    c.dims.assign(d, 4 + static_cast<int>(u(rng) * 12));
    c.lengths.clear();
    for (int a = 0; a < d; ++a) c.lengths.push_back(0.5 + 3 * u(rng));
    c.gravity_direction.assign(d, 0.0);
    c.gravity_direction[d - 1] = -1.0 - u(rng);
    c.gravity_magnitude = 5 * u(rng);
    c.flux = FluxSpec{1.0 + 1e-3 + u(rng), 2 * u(rng), u(rng) / 3,
                      trial % 2 ? MobilityMean::harmonic : MobilityMean::arithmetic};
    c.dt_init = c.dt_max = 1e-3 + u(rng) * 1e-2;
    c.ic.sigma = 0.1 + u(rng);
    c.ic.mass = 3 * u(rng);
    if (trial % 4 == 1) c.ic.center = {0.3 * c.lengths[0], 0.1 * c.lengths[1], IcPreset::kUnset};
    c.ic.seed = rng() >> 1;
    c.t_end = 10 * u(rng);
    c.audit_cadence = 0.01 + u(rng);
    c.out = "dir" + std::to_string(trial);
    ASSERT_NO_THROW(c.validate());
    const auto back = parse_config_text(to_text(c));
    EXPECT_EQ(back, c) << to_text(c);
    EXPECT_EQ(to_text(back), to_text(c));
  }
}

TEST(Experiments, ClaimsFollowHorizon) {
  EXPECT_EQ(claims_for_horizon(1.0).size(), all_claims().size() - 1);
  EXPECT_EQ(claims_for_horizon(2.0).size(), all_claims().size());
}

TEST(Experiments, FittedOrderRecoversPowerLaw) {
  const std::vector<double> h = {0.1, 0.05, 0.025, 0.0125};
  std::vector<double> e;
  for (double x : h) e.push_back(3.0 * std::pow(x, 1.7));
  EXPECT_NEAR(detail::fitted_order(h, e), 1.7, 1e-12);
}

TEST(Experiments, ParallelForIsIndexStable) {
  std::vector<double> a(40), b(40);
  auto work = [](int i) { return std::sin(i) * std::exp(0.01 * i); };
  detail::parallel_for(40, 1, [&](int i) { a[i] = work(i); });
  detail::parallel_for(40, 4, [&](int i) { b[i] = work(i); });
  EXPECT_EQ(a, b);
  EXPECT_THROW(detail::parallel_for(5, 3, [](int i) {
                 if (i == 3) throw Error("boom");
               }),
               Error);
}

TEST(Experiments, EpsilonListRules) {
  EXPECT_THROW(validate_epsilons({0.1}), InvalidArgument);
  try {
    validate_epsilons({0.1});
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("need ≥ 2 values"), std::string::npos);
  }
  EXPECT_THROW(validate_epsilons({0.05, 0.1}), InvalidArgument);
  EXPECT_THROW(validate_epsilons({0.1, 0.0}), InvalidArgument);
  EXPECT_THROW(validate_epsilons({1.5, 0.1}), InvalidArgument);
  EXPECT_NO_THROW(validate_epsilons({0.1, 0.1, 0.05}));
}

TEST(Experiments, RepeatedEpsilonGivesZeroDistance) {
  const auto dir = scratch("sweep_repeat");
  auto cfg = parse_config_text(kSmallConfig);
  cfg.t_end = 0.1;
  const auto o = sweep_epsilon(cfg, {0.05, 0.05}, dir);
  ASSERT_EQ(o.distances.size(), 1u);
  EXPECT_EQ(o.distances[0], 0.0);
  EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "eps_1" / "final.bin"));
}

TEST(Experiments, SnapshotStateRoundTrip) {
  Grid g({8, 6}, {1.0, 1.0});
  IcPreset pre;
  pre.name = "random-perturbed";
  pre.u_amplitude = 0.1;
  const auto ic = make_initial(g, pre);
  SimState s{ic.n0, ic.c0, ic.u0, ScalarField(g, 0.25), 1.5};
  const auto back = detail::state_of(detail::snapshot_of(s));
  EXPECT_TRUE(back.n == s.n);
  EXPECT_TRUE(back.c == s.c);
  EXPECT_TRUE(back.u == s.u);
  EXPECT_TRUE(back.pi == s.pi);
  EXPECT_EQ(back.t, 1.5);
}

TEST(Experiments, HeatModeDecayRate) {
  // rate error of the Neumann cosine mode; independent estimate of the
  // leading terms: (pi h)^2 / 12 from the stencil, lambda dt / 2 from Euler
  const auto row = detail::heat_mode_case(32);
  const double h = 1.0 / 32, lam = M_PI * M_PI;
  const double predicted = M_PI * M_PI * h * h / 12 + lam * 0.25 * h * h / 2;
  EXPECT_NEAR(row.aux, predicted, 0.1 * predicted);
}

TEST(Cli, RunWritesArtifactsAndIsDeterministic) {
  const auto dir = scratch("cli_run");
  std::ofstream(dir / "run.cfg") << kSmallConfig;
  const auto a = cli("run --config \"" + (dir / "run.cfg").string() + "\" --out \"" + (dir / "a").string() + "\"", dir);
  ASSERT_EQ(a.status, 0) << a.output;
  EXPECT_NE(a.output.find("all_pass=1"), std::string::npos);
  for (const char* f : {"manifest.txt", "audit.csv", "verdict.txt", "snapshots/snap_000000.bin"})
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  const auto b = cli("run --config \"" + (dir / "run.cfg").string() + "\" --out \"" + (dir / "b").string() + "\"", dir);
  ASSERT_EQ(b.status, 0);
  EXPECT_EQ(slurp(dir / "a" / "audit.csv"), slurp(dir / "b" / "audit.csv"));

  // manifest echo parses back to the effective configuration
  auto expected = parse_config_text(kSmallConfig);
  expected.out = (dir / "a").string();
  const auto manifest = slurp(dir / "a" / "manifest.txt");
  EXPECT_NE(manifest.find(kCodeVersion), std::string::npos);
  EXPECT_EQ(parse_config_text(manifest), expected);

  const auto re = cli("audit --out \"" + (dir / "a").string() + "\"", dir);
  EXPECT_EQ(re.status, 0) << re.output;
  EXPECT_EQ(slurp(dir / "a" / "reaudit.csv"), slurp(dir / "a" / "audit.csv"));
}

TEST(Cli, CadenceOverride) {
  const auto dir = scratch("cli_cadence");
  std::ofstream(dir / "run.cfg") << kSmallConfig;
  const auto r = cli("run --config \"" + (dir / "run.cfg").string() + "\" --out \"" + (dir / "o").string() +
                         "\" --cadence 0.05",
                     dir);
  ASSERT_EQ(r.status, 0) << r.output;
  std::ifstream csv(dir / "o" / "audit.csv");
  EXPECT_EQ(read_audit_csv(csv).size(), 17u);
}

TEST(Cli, ErrorsExitOne) {
  const auto dir = scratch("cli_errors");
  std::ofstream(dir / "bad.cfg") << "params.m = 0.9\n";
  auto r = cli("run --config \"" + (dir / "bad.cfg").string() + "\"", dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("m > 1"), std::string::npos);
  r = cli("run --config \"" + (dir / "missing.cfg").string() + "\"", dir);
  EXPECT_EQ(r.status, 1);
  std::ofstream(dir / "ok.cfg") << kSmallConfig;
  r = cli("sweep-epsilon --config \"" + (dir / "ok.cfg").string() + "\" --eps 0.1 --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("need ≥ 2 values"), std::string::npos);
  r = cli("convergence spiral", dir);
  EXPECT_EQ(r.status, 1);
  r = cli("frobnicate", dir);
  EXPECT_EQ(r.status, 1);
}

TEST(Cli, ClaimFailureExitsTwo) {
  // fluid starting at rest keeps accelerating over a short horizon
  const auto dir = scratch("cli_fail");
  std::ofstream(dir / "grow.cfg") << "grid.dims = 16, 16\ngrid.lengths = 2, 2\nparams.m = 1.5\n"
                                     "ic.sigma = 0.3\nparams.gravity_magnitude = 5\nrun.t_end = 0.08\n"
                                     "run.cadence = 0.01\n";
  const auto r = cli("run --config \"" + (dir / "grow.cfg").string() + "\" --out \"" + (dir / "o").string() + "\"", dir);
  EXPECT_EQ(r.status, 2) << r.output;
  EXPECT_NE(r.output.find("sup_bounded.ke_u.pass=0"), std::string::npos);
}

TEST(Cli, ConvergenceHeatMode) {
  const auto dir = scratch("cli_conv");
  const auto r = cli("convergence heat-mode --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "convergence_heat-mode.csv"));
  EXPECT_NE(r.output.find("# pass=1"), std::string::npos);
}
