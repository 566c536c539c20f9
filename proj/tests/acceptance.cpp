// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
//
// Default path counts are desk scale (about ten minutes on two cores).
// Set STOPDIFF_ACCEPTANCE_FULL=1 for the paper-scale benchmark sweep
// (10^6 paths per grid cell; hours), which also checks the published
// supremum errors within combined statistical tolerances.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "stopdiff/experiments.hpp"
#include "stopdiff/io.hpp"
#include "stopdiff/overshoot.hpp"

using namespace stopdiff;
using exit_sim::StoppingMode;
using feynman_kac::McOptions;
using geometry::TimeSpaceDomain;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& details) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
              details.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

bool full_scale() {
  const char* env = std::getenv("STOPDIFF_ACCEPTANCE_FULL");
  return env && std::strcmp(env, "1") == 0;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- 1 ----

void criterion1_shift_constant() {
  const double c0 = overshoot::c0_analytic();
  const bool analytic_ok = std::abs(c0 - 0.5826) < 5e-5;

  const auto run = overshoot::run_ladder(10'000'000, 1'000'000, 20260809, 0,
                                         /*keep_heights=*/false);
  const double mc = run.c0_estimate();
  const bool mc_ok = std::abs(mc - c0) < 0.005;
  const bool cap_ok = run.capped_fraction() < 0.002;

  report(1, analytic_ok && mc_ok && cap_ok,
         fmt("c0 analytic %.6f (4dp target 0.5826), ladder MC %.6f over 1e7 "
             "samples (|diff| %.2e < 5e-3), capped fraction %.2e < 2e-3",
             c0, mc, std::abs(mc - c0), run.capped_fraction()));
}

// ------------------------------------------------------------- 2 --------

struct GridOutcome {
  std::vector<double> deltas;
  std::vector<double> plain_sup, shifted_sup;
  std::vector<double> plain_se, shifted_se;  // largest per-point std errors
};

GridOutcome run_grid(std::int64_t n_paths, std::uint64_t seed) {
  auto preset = experiments::benchmark3d_grid_preset();
  preset.n_paths = n_paths;
  const auto result = experiments::run_preset(preset, seed);
  GridOutcome out;
  out.deltas = preset.deltas;
  for (double dt : preset.deltas) {
    for (const auto& sup : result.sup_errors) {
      if (sup.dt != dt) continue;
      if (sup.mode == StoppingMode::plain) {
        out.plain_sup.push_back(sup.sup_abs_error);
        out.plain_se.push_back(sup.max_std_error);
      } else {
        out.shifted_sup.push_back(sup.sup_abs_error);
        out.shifted_se.push_back(sup.max_std_error);
      }
    }
  }
  return out;
}

void criterion2_grid_pattern() {
  const std::int64_t n = full_scale() ? 1'000'000 : 100'000;
  const GridOutcome out = run_grid(n, 101);

  bool shifted_beats_plain = true;
  for (std::size_t i = 0; i < out.deltas.size(); ++i)
    shifted_beats_plain &= out.shifted_sup[i] < out.plain_sup[i];

  const double ratio = out.plain_sup.front() / out.plain_sup.back();
  const bool ratio_ok = ratio >= 2.2 && ratio <= 4.5;

  std::string details =
      fmt("n=%lld; plain sup { %.4f %.4f %.4f }, shifted sup { %.4f %.4f %.4f }; "
          "plain ratio d=.1 vs d=.01 is %.2f in [2.2, 4.5]",
          static_cast<long long>(n), out.plain_sup[0], out.plain_sup[1],
          out.plain_sup[2], out.shifted_sup[0], out.shifted_sup[1],
          out.shifted_sup[2], ratio);

  bool table_ok = true;
  if (full_scale()) {
    const double paper_plain[] = {0.169, 0.114, 0.0471};
    const double paper_shifted[] = {0.0220, 0.0115, 0.0026};
    const double paper_se = 0.001;  // reported 95% CI sizes of 1.5e-3..2e-3
    for (std::size_t i = 0; i < 3; ++i) {
      const double tol_p = 3.0 * std::hypot(out.plain_se[i], paper_se);
      const double tol_s = 3.0 * std::hypot(out.shifted_se[i], paper_se);
      table_ok &= std::abs(out.plain_sup[i] - paper_plain[i]) < tol_p;
      table_ok &= std::abs(out.shifted_sup[i] - paper_shifted[i]) < tol_s;
    }
    details += table_ok ? "; full-scale sup errors match the published values"
                        : "; full-scale sup errors OFF the published values";
  }

  report(2, shifted_beats_plain && ratio_ok && table_ok, details);
}

// ---------------------------------------------------------- 3 and 4 -----

struct PointCheck {
  int criterion;
  Vec x0;
  double exact;
  // published estimates (mean, half-CI at n = 1e6) keyed by (delta, mode)
  struct Target {
    double dt;
    StoppingMode mode;
    double mean;
    double half_ci;
  };
  std::vector<Target> targets;
};

void run_point_check(const PointCheck& check) {
  const bool full = full_scale();
  const std::int64_t n = full ? 1'000'000 : 100'000;
  const double widen = full ? 1.0 : 3.0;

  auto model = sde::benchmark3d_model();
  auto domain = TimeSpaceDomain::ball(Vec::Zero(3), 2.0);
  auto problem = feynman_kac::benchmark3d_problem(check.x0);

  bool ok = true;
  std::string details = fmt("x0=(%.1f,%.1f,%.1f) n=%lld:", check.x0(0),
                            check.x0(1), check.x0(2), static_cast<long long>(n));

  for (const auto& target : check.targets) {
    McOptions opt;
    opt.n_paths = n;
    opt.seed = mix_seed(505, static_cast<std::uint64_t>(check.criterion * 100 +
                                                        target.dt * 1000));
    const auto rep = feynman_kac::monte_carlo_estimate(model, domain, problem,
                                                       target.dt, target.mode, opt);
    const double paper_se = target.half_ci / 1.96;
    const double tol = 3.0 * widen * std::hypot(rep.std_error, paper_se);
    const bool match = std::abs(rep.mean - target.mean) < tol;
    ok &= match;
    details += fmt(" [d=%.2f %s: %.4f vs %.4f, tol %.4f%s]", target.dt,
                   exit_sim::to_string(target.mode), rep.mean, target.mean, tol,
                   match ? "" : " MISS");
  }

  // the true value must sit inside the shifted-mode CI at every delta
  for (double dt : {0.1, 0.05, 0.01}) {
    McOptions opt;
    opt.n_paths = n;
    opt.seed = mix_seed(909, static_cast<std::uint64_t>(check.criterion * 100 +
                                                        dt * 1000));
    const auto rep = feynman_kac::monte_carlo_estimate(
        model, domain, problem, dt, StoppingMode::shifted, opt);
    const double half = widen * 1.96 * rep.std_error;
    const bool inside = check.exact >= rep.mean - half && check.exact <= rep.mean + half;
    ok &= inside;
    details += fmt(" [shifted d=%.2f CI %.4f+/-%.4f%s]", dt, rep.mean, half,
                   inside ? "" : " EXCLUDES TRUTH");
  }

  report(check.criterion, ok, details);
}

void criterion3_point_a() {
  PointCheck check;
  check.criterion = 3;
  check.x0 = vec3(-0.7, 0.3, 0.7);
  check.exact = -0.147;
  check.targets = {{0.1, StoppingMode::plain, -0.0913, 0.0019},
                   {0.1, StoppingMode::shifted, -0.1477, 0.0016}};
  run_point_check(check);
}

void criterion4_point_b() {
  PointCheck check;
  check.criterion = 4;
  check.x0 = vec3(-0.7, 0.7, -0.7);
  check.exact = 0.343;
  check.targets = {{0.1, StoppingMode::plain, 0.5368, 0.0019},
                   {0.01, StoppingMode::shifted, 0.3473, 0.0016}};
  run_point_check(check);
}

// ---------------------------------------------------------- 5 and 6 -----

void criteria56_halfspace_convergence() {
  auto preset = experiments::halfspace_bm_preset();  // x0=0, level 1, T=1
  preset.n_paths = 1'000'000;
  const double exact = experiments::halfspace_hitting_probability(0.0, 1.0, 1.0);

  const auto result = experiments::run_preset(preset, 2202);

  std::vector<std::pair<double, double>> plain_points;
  double plain_err_finest = 0.0, plain_se_finest = 0.0;
  double shifted_err_coarsest = 0.0, shifted_err_finest = 0.0;
  bool plain_underestimates = true;
  for (const auto& row : result.rows) {
    const double err = row.report.mean - exact;
    if (row.mode == StoppingMode::plain) {
      plain_underestimates &= err < 0.0;
      if (std::abs(err) >= 2.0 * row.report.std_error)
        plain_points.emplace_back(row.dt, std::abs(err));
      if (row.dt == preset.deltas.back()) {
        plain_err_finest = std::abs(err);
        plain_se_finest = row.report.std_error;
      }
    } else {
      if (row.dt == preset.deltas.front()) shifted_err_coarsest = std::abs(err);
      if (row.dt == preset.deltas.back()) shifted_err_finest = std::abs(err);
    }
  }

  bool slope_ok = false;
  double slope = 0.0;
  if (plain_points.size() >= 2) {
    slope = experiments::fit_convergence_slope(plain_points).slope;
    slope_ok = slope >= 0.4 && slope <= 0.6;
  }
  report(5, slope_ok && plain_underestimates,
         fmt("plain-mode errors vs 2*Phi(-1)=%.6f over deltas 1/64..1/1024: "
             "log-log slope %.3f in [0.4, 0.6] from %zu significant points; "
             "signed errors all negative (discrete monitoring under-detects "
             "exits): %s",
             exact, slope, plain_points.size(),
             plain_underestimates ? "yes" : "NO"));

  const bool beats_refinement = shifted_err_coarsest < plain_err_finest &&
                                shifted_err_finest < plain_err_finest;
  report(6, beats_refinement,
         fmt("shifted |err| at d=1/64 %.2e and d=1/1024 %.2e, both below plain "
             "|err| %.2e at d=1/1024 (plain se %.1e): correction beats a 16x "
             "step refinement",
             shifted_err_coarsest, shifted_err_finest, plain_err_finest,
             plain_se_finest));
}

// --------------------------------------------------------------- 7 ------

void criterion7_overshoot_law() {
  // Half-space Brownian motion, unit noise amplitude, delta = 1e-4.
  // Start half a unit below the level so side exits are plentiful.
  const double dt = 1e-4;
  Vec dir(1);
  dir(0) = 1.0;
  auto domain = TimeSpaceDomain::half_space(dir, 0.5, 0.0, geometry::Horizon(0.5));
  auto model = sde::brownian_motion(1);
  feynman_kac::FeynmanKacProblem problem;
  problem.boundary_payoff = [](double, const Vec&) { return 1.0; };
  problem.terminal_payoff = [](double, const Vec&) { return 0.0; };
  problem.start = Vec(Vec::Zero(1));
  problem.horizon = 0.5;

  McOptions opt;
  opt.n_paths = 220'000;
  opt.seed = 714;
  const auto records = feynman_kac::collect_exit_records(
      model, domain, problem, dt, StoppingMode::plain, opt);
  const auto empirical = exit_sim::normalized_overshoot_cdf(records);

  const auto ladder = overshoot::run_ladder(2'000'000, 1'000'000, 4242, 0);
  const overshoot::LadderCdf limit(ladder.heights);

  std::vector<double> grid;
  for (double y = 0.0; y <= 3.0 + 1e-12; y += 0.05) grid.push_back(y);
  const double ks = overshoot::ks_distance(
      [&](double y) { return empirical(y); },
      [&](double y) { return limit(y); }, grid);

  const double mean = empirical.mean();
  const bool enough = empirical.n() >= 100'000;
  const bool ks_ok = ks < 0.02;
  const bool mean_ok = std::abs(mean - 0.5826) < 0.02;

  report(7, enough && ks_ok && mean_ok,
         fmt("%zu side exits at delta=1e-4: KS(empirical, ladder H) = %.4f < "
             "0.02; mean normalized overshoot %.4f within 0.02 of 0.5826",
             empirical.n(), ks, mean));
}

// --------------------------------------------------------------- 8 ------

void criterion8_invariants() {
  bool ok = true;
  std::string notes;

  // Exact spot checks of the geometric and arithmetic examples.
  auto ball = TimeSpaceDomain::ball(Vec::Zero(3), 2.0);
  ok &= std::abs(ball.signed_distance(0.0, vec3(0, 0, 0)) - 2.0) < 1e-15;
  ok &= std::abs(ball.signed_distance(0.0, vec3(2, 0, 0))) < 1e-15;
  ok &= std::abs(ball.signed_distance(0.0, vec3(3, 0, 0)) + 1.0) < 1e-15;

  {
    Vec dir(1);
    dir(0) = 1.0;
    auto hs = TimeSpaceDomain::half_space(dir, 1.0);
    auto bm = sde::brownian_motion(1);
    Vec x(1);
    x(0) = 0.9;
    const double shifted = geometry::shifted_signed_distance(hs, 0.0, x, 0.01, bm);
    ok &= std::abs(shifted - 0.04174) < 1e-5;
  }
  {
    auto model = sde::benchmark3d_model();
    Vec x = vec3(1, 2, 3);
    const Vec stepped = sde::euler_step(model, 0.0, x, 0.1, Vec(Vec::Zero(3)));
    ok &= (stepped - vec3(1.2, 2.3, 3.1)).norm() < 1e-12;
  }

  // Projection residuals and normals at 1e3 random tube points.
  {
    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      Vec x(3);
      x << u(rng), u(rng), u(rng);
      if (x.norm() < 1e-3) continue;
      x *= (0.2 + 1.7 * std::abs(u(rng))) / x.norm();
      const Vec p = ball.project_to_boundary(0.0, x);
      worst = std::max(worst, std::abs(ball.signed_distance(0.0, p)));
      const Vec n = ball.inward_normal(0.0, x);
      worst = std::max(worst, std::abs(n.norm() - 1.0));
    }
    ok &= worst < 1e-10;
    notes += fmt("geometry worst residual %.1e; ", worst);
  }

  // Source-vs-generator identity at 100 random points, 1e-6.
  {
    auto model = sde::benchmark3d_model();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-3;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vec x(3);
      for (int c = 0; c < 3; ++c) {
        double v = u(rng);
        if (std::abs(v) < 0.05) v += v < 0 ? -0.05 : 0.05;
        x(c) = v;
      }
      const Vec b = model.drift_at(0.0, x);
      const Mat a = model.diffusion_at(0.0, x) *
                    model.diffusion_at(0.0, x).transpose();
      auto uu = [](const Vec& y) {
        return feynman_kac::benchmark3d_exact_solution(y);
      };
      Vec grad(3);
      Mat hess(3, 3);
      for (int i = 0; i < 3; ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        grad(i) = (uu(xp) - uu(xm)) / (2 * h);
        hess(i, i) = (uu(xp) - 2 * uu(x) + uu(xm)) / (h * h);
        for (int j = i + 1; j < 3; ++j) {
          Vec xpp = x, xpm = x, xmp = x, xmm = x;
          xpp(i) += h;
          xpp(j) += h;
          xpm(i) += h;
          xpm(j) -= h;
          xmp(i) -= h;
          xmp(j) += h;
          xmm(i) -= h;
          xmm(j) -= h;
          hess(i, j) = hess(j, i) = (uu(xpp) - uu(xpm) - uu(xmp) + uu(xmm)) / (4 * h * h);
        }
      }
      const double generator = grad.dot(b) + 0.5 * (hess * a).trace();
      worst = std::max(worst,
                       std::abs(feynman_kac::benchmark3d_source(x) + generator));
    }
    ok &= worst < 1e-6;
    notes += fmt("generator identity worst %.1e; ", worst);
  }

  // Determinism: two runs, different worker counts, byte-identical CSV.
  {
    auto model = sde::benchmark3d_model();
    auto problem = feynman_kac::benchmark3d_problem(vec3(-0.7, 0.3, 0.7));
    McOptions o1;
    o1.n_paths = 20'000;
    o1.seed = 3131;
    o1.workers = 1;
    McOptions o2 = o1;
    o2.workers = 4;
    const auto r1 = feynman_kac::monte_carlo_estimate(model, ball, problem, 0.1,
                                                      StoppingMode::shifted, o1);
    const auto r2 = feynman_kac::monte_carlo_estimate(model, ball, problem, 0.1,
                                                      StoppingMode::shifted, o2);
    const std::string csv1 = feynman_kac::to_csv_row(r1, "benchmark3d", problem.start);
    const std::string csv2 = feynman_kac::to_csv_row(r2, "benchmark3d", problem.start);
    ok &= csv1 == csv2;
    notes += csv1 == csv2 ? "worker-count determinism: byte-identical"
                          : "worker-count determinism: MISMATCH";
  }

  report(8, ok, "exact examples, geometry residuals, generator identity, "
                "determinism -- " + notes);
}

// --------------------------------------------------------------- 9 ------

void criterion9_moving_interval() {
  auto preset = experiments::moving_interval_preset();  // deltas 1/20,1/40,1/80
  preset.n_paths = 200'000;

  const double dt_ref = preset.deltas.back() / 8.0;
  const auto ref = experiments::reference_solution(preset, dt_ref, 800'000, 6001);

  const auto result = experiments::run_preset(preset, 6002);

  std::vector<double> plain_err, shifted_err;
  for (double dt : preset.deltas) {
    for (const auto& row : result.rows) {
      if (row.dt != dt) continue;
      const double err = std::abs(row.report.mean - ref.value);
      (row.mode == StoppingMode::plain ? plain_err : shifted_err).push_back(err);
    }
  }

  bool plain_decreases = plain_err.front() > plain_err.back();
  bool shifted_closer = true;
  for (std::size_t i = 0; i < plain_err.size(); ++i)
    shifted_closer &= shifted_err[i] < plain_err[i];

  report(9, plain_decreases && shifted_closer,
         fmt("moving walls, reference %.5f +/- %.5f at delta=%.5f: plain errs "
             "{ %.4f %.4f %.4f } decrease toward it, shifted errs { %.4f %.4f "
             "%.4f } smaller at every delta",
             ref.value, 1.96 * ref.std_error, dt_ref, plain_err[0], plain_err[1],
             plain_err[2], shifted_err[0], shifted_err[1], shifted_err[2]));
}

}  // namespace

int main() {
  std::printf("stopdiff acceptance suite (%s scale)\n",
              full_scale() ? "full" : "desk");

  criterion1_shift_constant();
  criterion2_grid_pattern();
  criterion3_point_a();
  criterion4_point_b();
  criteria56_halfspace_convergence();
  criterion7_overshoot_law();
  criterion8_invariants();
  criterion9_moving_interval();

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
