// stopdiff command-line driver.
//
// Exit codes: 0 success, 1 simulation failure, 2 configuration/usage error.
// All output files are written atomically (temp file + rename) and start
// with a provenance comment (version, seed, config hash).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stopdiff/config.hpp"
#include "stopdiff/experiments.hpp"
#include "stopdiff/io.hpp"
#include "stopdiff/overshoot.hpp"

namespace {

using namespace stopdiff;

std::vector<double> parse_number_list(const std::string& text) {
  // "0.1,0.05" or fractions "1/64"; an "a..b" range halves from a down to b.
  auto parse_one = [](const std::string& tok) -> double {
    const auto slash = tok.find('/');
    if (slash != std::string::npos)
      return std::stod(tok.substr(0, slash)) / std::stod(tok.substr(slash + 1));
    return std::stod(tok);
  };
  std::vector<double> out;
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const double from = parse_one(text.substr(0, range));
    const double to = parse_one(text.substr(range + 2));
    if (!(from > 0) || !(to > 0) || from < to)
      throw cli::ConfigError("range must go from a larger to a smaller value: " +
                             text);
    for (double d = from; d > to * (1.0 - 1e-12); d /= 2.0) out.push_back(d);
    return out;
  }
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(parse_one(tok));
    } catch (const std::exception&) {
      throw cli::ConfigError("cannot parse number '" + tok + "'");
    }
  }
  if (out.empty()) throw cli::ConfigError("empty number list '" + text + "'");
  return out;
}

std::vector<std::string> parse_modes(const std::string& text) {
  if (text == "both") return {"plain", "shifted"};
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

exit_sim::StoppingMode mode_from_string(const std::string& name) {
  return name == "plain" ? exit_sim::StoppingMode::plain
                         : exit_sim::StoppingMode::shifted;
}

std::string csv_document(const cli::RunConfig& cfg, const std::string& header,
                         const std::string& body) {
  std::string doc = io::metadata_comment(cfg.seed, cli::canonical_text(cfg));
  doc += '\n';
  doc += header;
  doc += '\n';
  doc += body;
  return doc;
}

void write_output(const cli::RunConfig& cfg, const std::string& header,
                  const std::string& body) {
  if (cfg.output.empty()) return;
  io::atomic_write_file(cfg.output, csv_document(cfg, header, body));
  std::cout << "wrote " << cfg.output << "\n";
}

int cmd_estimate(const cli::RunConfig& cfg) {
  cli::ProblemBundle bundle = cli::build_problem_bundle(cfg);
  std::string body;
  for (double dt : cfg.deltas) {
    for (const std::string& mode_name : cfg.modes) {
      feynman_kac::McOptions opt;
      opt.n_paths = cfg.n_paths;
      opt.seed = cfg.seed;
      opt.workers = cfg.workers;
      opt.max_steps = cfg.max_steps;
      const auto report = feynman_kac::monte_carlo_estimate(
          bundle.model, bundle.domain, bundle.problem, dt,
          mode_from_string(mode_name), opt);
      std::cout << cfg.preset << ": " << feynman_kac::to_string(report);
      if (bundle.exact)
        std::cout << "  [exact " << *bundle.exact << ", error "
                  << report.mean - *bundle.exact << "]";
      std::cout << "\n";
      body += feynman_kac::to_csv_row(report, cfg.preset, bundle.problem.start);
      body += '\n';
    }
  }
  write_output(cfg, feynman_kac::csv_header(), body);
  return 0;
}

int cmd_ladder(const cli::RunConfig& cfg) {
  const auto run = overshoot::run_ladder(cfg.n_paths, cfg.ladder_cap, cfg.seed,
                                         cfg.workers, !cfg.output.empty());
  const double c0 = overshoot::c0_analytic();
  std::printf("ladder samples: %lld  (capped fraction %.2e at cap %lld)\n",
              static_cast<long long>(run.n_samples), run.capped_fraction(),
              static_cast<long long>(cfg.ladder_cap));
  std::printf(
      "c0 estimate E[s^2]/(2E[s]) = %.6f   analytic -zeta(1/2)/sqrt(2 pi) = "
      "%.6f (%.4f)\n",
      run.c0_estimate(), c0, c0);
  if (!cfg.output.empty()) {
    const overshoot::LadderCdf cdf(run.heights);
    std::string body;
    for (double y = 0.0; y <= cfg.grid_max + 1e-12; y += cfg.grid_step) {
      body += io::format_double(y);
      body += ',';
      body += io::format_double(cdf(y));
      body += '\n';
    }
    write_output(cfg, "y,limit_cdf", body);
  }
  return 0;
}

int cmd_overshoot(const cli::RunConfig& cfg) {
  if (cfg.deltas.size() != 1)
    throw cli::ConfigError("overshoot needs exactly one delta");
  if (cfg.preset != "halfspace-bm" && cfg.preset != "moving-interval")
    throw cli::ConfigError(
        "overshoot compares against the unit-noise-amplitude limit law; "
        "use preset halfspace-bm or moving-interval");
  cli::ProblemBundle bundle = cli::build_problem_bundle(cfg);

  feynman_kac::McOptions opt;
  opt.n_paths = cfg.n_paths;
  opt.seed = cfg.seed;
  opt.workers = cfg.workers;
  opt.max_steps = cfg.max_steps;
  const auto records = feynman_kac::collect_exit_records(
      bundle.model, bundle.domain, bundle.problem, cfg.deltas[0],
      mode_from_string(cfg.modes.front()), opt);
  const auto empirical = exit_sim::normalized_overshoot_cdf(records);

  const auto ladder = overshoot::run_ladder(
      1'000'000, cfg.ladder_cap, mix_seed(cfg.seed, 777), cfg.workers, true);
  const overshoot::LadderCdf limit(ladder.heights);

  std::vector<double> grid;
  for (double y = 0.0; y <= cfg.grid_max + 1e-12; y += cfg.grid_step)
    grid.push_back(y);
  const double ks =
      overshoot::ks_distance([&](double y) { return empirical(y); },
                             [&](double y) { return limit(y); }, grid);

  std::printf("side exits: %zu of %lld paths, delta=%g\n", empirical.n(),
              static_cast<long long>(cfg.n_paths), cfg.deltas[0]);
  std::printf("mean normalized overshoot = %.5f   (limit constant %.5f)\n",
              empirical.mean(), overshoot::c0_analytic());
  std::printf("KS distance to ladder limit CDF = %.5f\n", ks);

  std::string body;
  for (double y : grid) {
    body += io::format_double(y);
    body += ',';
    body += io::format_double(empirical(y));
    body += ',';
    body += io::format_double(limit(y));
    body += '\n';
  }
  write_output(cfg, "y,empirical_cdf,limit_cdf", body);
  return 0;
}

int cmd_convergence(const cli::RunConfig& cfg) {
  cli::ProblemBundle bundle = cli::build_problem_bundle(cfg);

  std::optional<double> truth = bundle.exact;
  if (!truth) {
    // No closed form: fall back to a fine-step shifted reference.
    experiments::ExperimentPreset preset = experiments::moving_interval_preset();
    preset.deltas = cfg.deltas;
    preset.x0 = bundle.problem.start;
    const double dt_ref =
        *std::min_element(cfg.deltas.begin(), cfg.deltas.end()) / 8.0;
    const auto ref = experiments::reference_solution(
        preset, dt_ref, 4 * cfg.n_paths, mix_seed(cfg.seed, 999), cfg.workers);
    std::printf("reference (shifted, delta=%g): %.6f +/- %.6f\n", dt_ref,
                ref.value, 1.96 * ref.std_error);
    truth = ref.value;
  }

  std::string body;
  std::string plot;
  std::vector<std::pair<double, double>> plain_points;
  for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
    const double dt = cfg.deltas[di];
    const std::uint64_t cell_seed = mix_seed(cfg.seed, di);  // shared by modes
    for (const std::string& mode_name : cfg.modes) {
      feynman_kac::McOptions opt;
      opt.n_paths = cfg.n_paths;
      opt.seed = cell_seed;
      opt.workers = cfg.workers;
      opt.max_steps = cfg.max_steps;
      const auto report = feynman_kac::monte_carlo_estimate(
          bundle.model, bundle.domain, bundle.problem, dt,
          mode_from_string(mode_name), opt);
      const double err = report.mean - *truth;
      std::printf("delta=%-10g %-8s estimate %.6f  error %+.2e  (stderr %.2e)\n",
                  dt, mode_name.c_str(), report.mean, err, report.std_error);
      body += feynman_kac::to_csv_row(report, cfg.preset, bundle.problem.start);
      body += ',';
      body += io::format_double(err);
      body += '\n';
      if (mode_name == "plain" && std::abs(err) >= 2.0 * report.std_error) {
        plain_points.emplace_back(dt, std::abs(err));
        plot += io::format_double(-std::log(dt));
        plot += ' ';
        plot += io::format_double(-std::log(std::abs(err)));
        plot += '\n';
      }
    }
  }

  if (plain_points.size() >= 2) {
    const auto fit = experiments::fit_convergence_slope(plain_points);
    std::printf("plain-mode log-log slope: %.4f (intercept %.4f) from %zu points\n",
                fit.slope, fit.intercept, plain_points.size());
  } else {
    std::printf("plain-mode errors statistically insignificant; no slope fit\n");
  }

  write_output(cfg, feynman_kac::csv_header() + ",error", body);
  if (!cfg.plot_output.empty()) {
    io::atomic_write_file(cfg.plot_output, plot);
    std::cout << "wrote " << cfg.plot_output << "\n";
  }
  return 0;
}

int cmd_preset(const cli::RunConfig& cfg, bool deltas_overridden) {
  experiments::ExperimentPreset preset = [&] {
    if (cfg.preset == "benchmark3d-grid")
      return experiments::benchmark3d_grid_preset();
    if (cfg.preset == "benchmark3d-point") {
      Vec x0(3);
      if (cfg.x0.size() == 3)
        x0 << cfg.x0[0], cfg.x0[1], cfg.x0[2];
      else
        x0 << -0.7, 0.3, 0.7;
      return experiments::benchmark3d_point_preset(x0);
    }
    if (cfg.preset == "halfspace-bm")
      return experiments::halfspace_bm_preset(cfg.x0.empty() ? 0.0 : cfg.x0[0],
                                              cfg.level, cfg.horizon_t);
    if (cfg.preset == "moving-interval")
      return experiments::moving_interval_preset();
    throw cli::ConfigError("unknown experiment preset '" + cfg.preset + "'");
  }();

  preset.n_paths = cfg.full_scale ? 1'000'000 : cfg.n_paths;
  if (deltas_overridden) preset.deltas = cfg.deltas;

  // Stream rows to a .partial file so an interrupted sweep keeps its data.
  std::string body;
  const std::string header = feynman_kac::csv_header() + ",exact,abs_error";
  const std::string partial_path =
      cfg.output.empty() ? "" : cfg.output + ".partial";
  auto on_row = [&](const experiments::PresetRow& row) {
    body += feynman_kac::to_csv_row(row.report, preset.name, row.x0);
    body += ',';
    body += row.exact ? io::format_double(*row.exact) : "";
    body += ',';
    body += row.abs_error ? io::format_double(*row.abs_error) : "";
    body += '\n';
    if (!partial_path.empty())
      io::atomic_write_file(partial_path, csv_document(cfg, header, body));
  };

  const auto result = experiments::run_preset(preset, cfg.seed, cfg.workers, on_row);
  std::cout << experiments::format_summary(preset, result);
  write_output(cfg, header, body);
  if (!partial_path.empty()) std::remove(partial_path.c_str());
  return 0;
}

// CLI11 stops at values that look like flags ("--x0 -0.7,0.3,0.7"); fuse
// known value-taking options with their argument up front.
std::vector<std::string> fuse_negative_values(int argc, char** argv) {
  static const std::set<std::string> value_flags = {"--x0", "--deltas",
                                                    "--delta", "--center",
                                                    "--level"};
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (value_flags.contains(a) && i + 1 < argc && argv[i + 1][0] == '-' &&
        std::string(argv[i + 1]).find_first_of("0123456789.") == 1) {
      args.push_back(a + "=" + argv[++i]);
    } else {
      args.push_back(std::move(a));
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo simulation of diffusions stopped at domain "
               "boundaries, with boundary-shift correction"};
  app.require_subcommand(1);

  std::string config_path, x0_text, deltas_text, modes_text;
  cli::RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override)");
    sub->add_option("--preset", cfg.preset, "problem preset or 'custom'");
    sub->add_option("--x0", x0_text, "start point, comma-separated");
    sub->add_option("--delta,--deltas", deltas_text,
                    "step sizes: list '0.1,0.05' or halving range '1/64..1/1024'");
    sub->add_option("--mode,--modes", modes_text, "plain, shifted or both");
    sub->add_option("--n", cfg.n_paths, "Monte Carlo paths per estimate");
    sub->add_option("--seed", cfg.seed, "master RNG seed");
    sub->add_option("--workers", cfg.workers,
                    "worker threads (0: STOPDIFF_WORKERS env or hardware)");
    sub->add_option("--max-steps", cfg.max_steps, "open-horizon step budget");
    sub->add_option("--out", cfg.output, "results CSV path");
    sub->add_option("--plot-out", cfg.plot_output, "two-column plot data path");
    sub->add_option("--level", cfg.level, "half-space boundary level");
    sub->add_option("--horizon", cfg.horizon_t, "final time T");
    sub->add_option("--sigma-scale", cfg.sigma_scale, "scaled-bm diffusion scale");
    sub->add_option("--cap", cfg.ladder_cap, "ladder epoch cap");
    sub->add_option("--grid-max", cfg.grid_max, "CDF grid upper end");
    sub->add_option("--grid-step", cfg.grid_step, "CDF grid spacing");
    sub->add_flag("--full-scale", cfg.full_scale, "paper-scale path counts");
  };

  CLI::App* est =
      app.add_subcommand("estimate", "one Monte Carlo estimate per delta/mode");
  CLI::App* conv =
      app.add_subcommand("convergence", "error-vs-delta sweep and log-log slope");
  CLI::App* over =
      app.add_subcommand("overshoot", "exit-overshoot CDF vs its ladder limit");
  CLI::App* ladder = app.add_subcommand(
      "ladder", "Gaussian-walk ladder heights and the shift constant");
  CLI::App* preset =
      app.add_subcommand("preset", "run a predefined experiment sweep");
  for (CLI::App* sub : {est, conv, over, ladder, preset}) add_common(sub);

  std::vector<std::string> fused = fuse_negative_values(argc, argv);
  std::vector<const char*> cargs;
  cargs.push_back(argv[0]);
  for (const std::string& s : fused) cargs.push_back(s.c_str());

  try {
    try {
      app.parse(static_cast<int>(cargs.size()),
                const_cast<char**>(cargs.data()));
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string subcommand = sub->get_name();

    if (!config_path.empty()) {
      cli::RunConfig file_cfg = cli::parse_config_file(config_path);
      // Flags override file values: keep the file value only where the
      // user passed no flag.
      auto keep = [&](const std::string& flag, auto member_ptr) {
        if (sub->count(flag) == 0) cfg.*member_ptr = file_cfg.*member_ptr;
      };
      keep("--preset", &cli::RunConfig::preset);
      keep("--n", &cli::RunConfig::n_paths);
      keep("--seed", &cli::RunConfig::seed);
      keep("--workers", &cli::RunConfig::workers);
      keep("--max-steps", &cli::RunConfig::max_steps);
      keep("--out", &cli::RunConfig::output);
      keep("--plot-out", &cli::RunConfig::plot_output);
      keep("--level", &cli::RunConfig::level);
      keep("--horizon", &cli::RunConfig::horizon_t);
      keep("--sigma-scale", &cli::RunConfig::sigma_scale);
      keep("--cap", &cli::RunConfig::ladder_cap);
      keep("--grid-max", &cli::RunConfig::grid_max);
      keep("--grid-step", &cli::RunConfig::grid_step);
      keep("--full-scale", &cli::RunConfig::full_scale);
      if (sub->count("--x0") == 0) cfg.x0 = file_cfg.x0;
      if (sub->count("--delta") == 0) cfg.deltas = file_cfg.deltas;
      if (sub->count("--mode") == 0) cfg.modes = file_cfg.modes;
      cfg.model = file_cfg.model;
      cfg.domain = file_cfg.domain;
      cfg.center = file_cfg.center;
      cfg.radius = file_cfg.radius;
      cfg.open_horizon = file_cfg.open_horizon;
      cfg.lower0 = file_cfg.lower0;
      cfg.lower_slope = file_cfg.lower_slope;
      cfg.upper0 = file_cfg.upper0;
      cfg.upper_slope = file_cfg.upper_slope;
      cfg.payoff_g = file_cfg.payoff_g;
      cfg.source_f = file_cfg.source_f;
      cfg.potential_k = file_cfg.potential_k;
    }
    if (sub->count("--x0") > 0) cfg.x0 = parse_number_list(x0_text);
    if (sub->count("--delta") > 0) cfg.deltas = parse_number_list(deltas_text);
    if (sub->count("--mode") > 0) cfg.modes = parse_modes(modes_text);

    const bool no_file = config_path.empty();
    if (subcommand == "convergence") {
      if (sub->count("--mode") == 0 && no_file) cfg.modes = {"plain", "shifted"};
      if (sub->count("--preset") == 0 && no_file) cfg.preset = "halfspace-bm";
    } else if (subcommand == "overshoot") {
      if (sub->count("--delta") == 0 && no_file) cfg.deltas = {1e-4};
      if (sub->count("--mode") == 0 && no_file) cfg.modes = {"plain"};
      if (sub->count("--preset") == 0 && no_file) cfg.preset = "halfspace-bm";
    } else if (subcommand == "ladder") {
      if (sub->count("--n") == 0 && no_file) cfg.n_paths = 1'000'000;
    } else if (subcommand == "preset") {
      if (sub->count("--preset") == 0 && no_file) cfg.preset = "benchmark3d-grid";
    }

    cfg.subcommand = subcommand;
    cli::validate(cfg);

    if (subcommand == "estimate") return cmd_estimate(cfg);
    if (subcommand == "convergence") return cmd_convergence(cfg);
    if (subcommand == "overshoot") return cmd_overshoot(cfg);
    if (subcommand == "ladder") return cmd_ladder(cfg);
    return cmd_preset(cfg, sub->count("--delta") > 0);
  } catch (const cli::ConfigError& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[simulation]: " << e.what() << "\n";
    return 1;
  }
}
