#include "stopdiff/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stopdiff/io.hpp"

namespace stopdiff::cli {

using nlohmann::json;

double PolynomialSpec::evaluate(const Vec& x) const {
  double sum = 0.0;
  for (const Monomial& m : monomials) {
    double term = m.coeff;
    const auto n = std::min<std::size_t>(m.powers.size(),
                                         static_cast<std::size_t>(x.size()));
    for (std::size_t i = 0; i < n; ++i)
      for (int p = 0; p < m.powers[i]; ++p) term *= x(static_cast<Eigen::Index>(i));
    sum += term;
  }
  return sum;
}

namespace {

// Strict accessor: every key must be consumed, everything else is an error
// naming its full path. Silent typos in delta or seed invalidate whole
// experiment runs, hence no lenient mode.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object())
      throw ConfigError(path_ + ": expected an object");
  }

  ~Section() = default;

  bool has(const std::string& key) const { return node_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) return nullptr;
    return &node_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = take(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  void check_no_unknown() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.contains(it.key()))
        throw ConfigError(path_ + "." + it.key() + ": unknown key");
  }

  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

PolynomialSpec parse_polynomial(const json& node, const std::string& path) {
  PolynomialSpec spec;
  if (node.is_number()) {  // shorthand for a constant
    spec.monomials.push_back({node.get<double>(), {}});
    return spec;
  }
  Section sec(node, path);
  const json* monomials = sec.take("monomials");
  sec.check_no_unknown();
  if (!monomials || !monomials->is_array())
    throw ConfigError(path + ": expected a number or {\"monomials\": [...]}");
  for (std::size_t i = 0; i < monomials->size(); ++i) {
    Section m((*monomials)[i], path + ".monomials[" + std::to_string(i) + "]");
    PolynomialSpec::Monomial mono;
    m.read("coeff", mono.coeff);
    m.read("powers", mono.powers);
    m.check_no_unknown();
    for (int p : mono.powers)
      if (p < 0) throw ConfigError(m.path() + ": negative power");
    spec.monomials.push_back(std::move(mono));
  }
  return spec;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  RunConfig cfg;
  Section top(root, origin);

  if (const json* run = top.take("run")) {
    Section sec(*run, origin + ".run");
    sec.read("subcommand", cfg.subcommand);
    sec.read("seed", cfg.seed);
    sec.read("n_paths", cfg.n_paths);
    sec.read("workers", cfg.workers);
    sec.read("max_steps", cfg.max_steps);
    sec.read("full_scale", cfg.full_scale);
    sec.check_no_unknown();
  }
  if (const json* problem = top.take("problem")) {
    Section sec(*problem, origin + ".problem");
    sec.read("preset", cfg.preset);
    sec.read("x0", cfg.x0);
    sec.read("deltas", cfg.deltas);
    sec.read("modes", cfg.modes);
    sec.read("model", cfg.model);
    sec.read("domain", cfg.domain);
    sec.read("center", cfg.center);
    sec.read("radius", cfg.radius);
    sec.read("open_horizon", cfg.open_horizon);
    sec.read("level", cfg.level);
    sec.read("horizon", cfg.horizon_t);
    sec.read("sigma_scale", cfg.sigma_scale);
    if (const json* lower = sec.take("lower")) {
      if (!lower->is_array() || lower->size() != 2)
        throw ConfigError(origin + ".problem.lower: expected [offset, slope]");
      cfg.lower0 = (*lower)[0].get<double>();
      cfg.lower_slope = (*lower)[1].get<double>();
    }
    if (const json* upper = sec.take("upper")) {
      if (!upper->is_array() || upper->size() != 2)
        throw ConfigError(origin + ".problem.upper: expected [offset, slope]");
      cfg.upper0 = (*upper)[0].get<double>();
      cfg.upper_slope = (*upper)[1].get<double>();
    }
    if (const json* g = sec.take("g")) cfg.payoff_g = parse_polynomial(*g, origin + ".problem.g");
    if (const json* f = sec.take("f")) cfg.source_f = parse_polynomial(*f, origin + ".problem.f");
    if (const json* k = sec.take("k")) cfg.potential_k = parse_polynomial(*k, origin + ".problem.k");
    sec.check_no_unknown();
  }
  if (const json* ladder = top.take("ladder")) {
    Section sec(*ladder, origin + ".ladder");
    sec.read("cap", cfg.ladder_cap);
    sec.read("grid_max", cfg.grid_max);
    sec.read("grid_step", cfg.grid_step);
    sec.check_no_unknown();
  }
  if (const json* output = top.take("output")) {
    Section sec(*output, origin + ".output");
    sec.read("csv", cfg.output);
    sec.read("plot", cfg.plot_output);
    sec.check_no_unknown();
  }
  top.check_no_unknown();

  validate(cfg);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void validate(const RunConfig& cfg) {
  static const std::set<std::string> subcommands = {
      "", "estimate", "convergence", "overshoot", "ladder", "preset"};
  if (!subcommands.contains(cfg.subcommand))
    throw ConfigError("subcommand must be one of estimate, convergence, "
                      "overshoot, ladder, preset");
  if (cfg.deltas.empty()) throw ConfigError("deltas must be non-empty");
  for (double d : cfg.deltas)
    if (!(d > 0.0)) throw ConfigError("delta must be > 0");
  if (cfg.n_paths < 2) throw ConfigError("n_paths must be >= 2");
  if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
  if (cfg.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (!(cfg.horizon_t > 0.0)) throw ConfigError("horizon must be > 0");
  if (!(cfg.sigma_scale > 0.0)) throw ConfigError("sigma_scale must be > 0");
  if (cfg.ladder_cap < 1) throw ConfigError("ladder cap must be >= 1");
  if (!(cfg.grid_max > 0.0)) throw ConfigError("grid_max must be > 0");
  if (!(cfg.grid_step > 0.0)) throw ConfigError("grid_step must be > 0");
  if (!(cfg.upper0 > cfg.lower0))
    throw ConfigError("moving interval: upper(0) must exceed lower(0)");
  for (const std::string& m : cfg.modes)
    if (m != "plain" && m != "shifted")
      throw ConfigError("mode must be plain or shifted, got '" + m + "'");
  if (cfg.modes.empty()) throw ConfigError("modes must be non-empty");
  for (double v : cfg.x0)
    if (!std::isfinite(v)) throw ConfigError("x0 must be finite");
  if (!(cfg.radius > 0.0)) throw ConfigError("radius must be > 0");
  static const std::set<std::string> models = {"bm", "scaled-bm", "benchmark3d"};
  if (!models.contains(cfg.model))
    throw ConfigError("model must be one of bm, scaled-bm, benchmark3d");
  static const std::set<std::string> domains = {"ball", "halfspace",
                                                "moving-interval"};
  if (!domains.contains(cfg.domain))
    throw ConfigError("domain must be one of ball, halfspace, moving-interval");
}

std::string canonical_text(const RunConfig& c) {
  std::ostringstream os;
  auto vec = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += io::format_double(v[i]);
    }
    return s + "]";
  };
  os << "subcommand=" << c.subcommand << '\n'
     << "preset=" << c.preset << '\n'
     << "model=" << c.model << '\n'
     << "domain=" << c.domain << '\n'
     << "center=" << vec(c.center) << '\n'
     << "radius=" << io::format_double(c.radius) << '\n'
     << "open_horizon=" << (c.open_horizon ? 1 : 0) << '\n'
     << "x0=" << vec(c.x0) << '\n'
     << "deltas=" << vec(c.deltas) << '\n'
     << "n_paths=" << c.n_paths << '\n'
     << "seed=" << c.seed << '\n';
  os << "modes=";
  for (std::size_t i = 0; i < c.modes.size(); ++i)
    os << (i ? "," : "") << c.modes[i];
  os << '\n'
     << "max_steps=" << c.max_steps << '\n'
     << "level=" << io::format_double(c.level) << '\n'
     << "horizon=" << io::format_double(c.horizon_t) << '\n'
     << "sigma_scale=" << io::format_double(c.sigma_scale) << '\n'
     << "lower=" << io::format_double(c.lower0) << "," << io::format_double(c.lower_slope) << '\n'
     << "upper=" << io::format_double(c.upper0) << "," << io::format_double(c.upper_slope) << '\n'
     << "ladder_cap=" << c.ladder_cap << '\n'
     << "grid=" << io::format_double(c.grid_max) << "," << io::format_double(c.grid_step) << '\n'
     << "full_scale=" << (c.full_scale ? 1 : 0) << '\n';
  auto poly = [&](const char* name, const std::optional<PolynomialSpec>& p) {
    if (!p) return;
    os << name << "=";
    for (const auto& m : p->monomials) {
      os << io::format_double(m.coeff) << ":(";
      for (std::size_t i = 0; i < m.powers.size(); ++i)
        os << (i ? "," : "") << m.powers[i];
      os << ") ";
    }
    os << '\n';
  };
  poly("g", c.payoff_g);
  poly("f", c.source_f);
  poly("k", c.potential_k);
  return os.str();
}

namespace {

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

exit_sim::ScalarField field_from(const std::optional<PolynomialSpec>& spec) {
  if (!spec) return nullptr;
  return [p = *spec](double, const Vec& x) { return p.evaluate(x); };
}

}  // namespace

ProblemBundle build_problem_bundle(const RunConfig& cfg) {
  using geometry::TimeSpaceDomain;

  if (cfg.preset == "benchmark3d") {
    Vec x0 = cfg.x0.empty() ? to_vec({-0.7, 0.3, 0.7}) : to_vec(cfg.x0);
    if (x0.size() != 3) throw ConfigError("benchmark3d needs a 3-component x0");
    return ProblemBundle{sde::benchmark3d_model(),
                         TimeSpaceDomain::ball(Vec::Zero(3), 2.0),
                         feynman_kac::benchmark3d_problem(x0),
                         feynman_kac::benchmark3d_exact_solution(x0)};
  }

  if (cfg.preset == "halfspace-bm") {
    Vec x0 = cfg.x0.empty() ? to_vec({0.0}) : to_vec(cfg.x0);
    if (x0.size() != 1) throw ConfigError("halfspace-bm is one-dimensional");
    feynman_kac::FeynmanKacProblem p;
    p.boundary_payoff = [](double, const Vec&) { return 1.0; };
    p.terminal_payoff = [](double, const Vec&) { return 0.0; };
    p.start = x0;
    p.horizon = cfg.horizon_t;
    Vec dir(1);
    dir(0) = 1.0;
    return ProblemBundle{
        sde::brownian_motion(1),
        TimeSpaceDomain::half_space(dir, cfg.level, 0.0, cfg.horizon_t),
        std::move(p),
        2.0 * normal_cdf(-(cfg.level - x0(0)) / std::sqrt(cfg.horizon_t))};
  }

  if (cfg.preset == "moving-interval") {
    Vec x0 = cfg.x0.empty() ? to_vec({0.0}) : to_vec(cfg.x0);
    if (x0.size() != 1) throw ConfigError("moving-interval is one-dimensional");
    feynman_kac::FeynmanKacProblem p;
    if (cfg.payoff_g)
      p.boundary_payoff = field_from(cfg.payoff_g);
    else
      p.boundary_payoff = [](double, const Vec& x) { return x(0) * x(0); };
    p.source = field_from(cfg.source_f);
    p.potential = field_from(cfg.potential_k);
    p.start = x0;
    p.horizon = cfg.horizon_t;
    const double l0 = cfg.lower0, ls = cfg.lower_slope;
    const double u0 = cfg.upper0, us = cfg.upper_slope;
    return ProblemBundle{sde::brownian_motion(1),
                         TimeSpaceDomain::moving_interval(
                             [l0, ls](double t) { return l0 + ls * t; },
                             [u0, us](double t) { return u0 + us * t; },
                             cfg.horizon_t),
                         std::move(p), std::nullopt};
  }

  if (cfg.preset != "custom")
    throw ConfigError("unknown preset '" + cfg.preset +
                      "' (expected benchmark3d, halfspace-bm, moving-interval "
                      "or custom)");

  if (cfg.x0.empty()) throw ConfigError("custom problems need x0");
  Vec x0 = to_vec(cfg.x0);
  const int dim = static_cast<int>(x0.size());

  auto model = [&]() -> sde::SdeModel {
    if (cfg.model == "bm") return sde::brownian_motion(dim);
    if (cfg.model == "scaled-bm") return sde::scaled_brownian_motion(dim, cfg.sigma_scale);
    if (dim != 3) throw ConfigError("benchmark3d model is three-dimensional");
    return sde::benchmark3d_model();
  }();

  const geometry::Horizon horizon =
      cfg.open_horizon ? geometry::kOpenHorizon : geometry::Horizon(cfg.horizon_t);
  auto domain = [&]() -> TimeSpaceDomain {
    if (cfg.domain == "ball") {
      Vec center = cfg.center.empty() ? Vec(Vec::Zero(dim)) : to_vec(cfg.center);
      if (center.size() != dim) throw ConfigError("center has wrong dimension");
      return TimeSpaceDomain::ball(std::move(center), cfg.radius, horizon);
    }
    if (cfg.domain == "halfspace") {
      Vec dir = Vec::Zero(dim);
      dir(0) = 1.0;
      return TimeSpaceDomain::half_space(std::move(dir), cfg.level, 0.0, horizon);
    }
    if (dim != 1) throw ConfigError("moving-interval domains are one-dimensional");
    if (cfg.open_horizon) throw ConfigError("moving-interval needs a finite horizon");
    const double l0 = cfg.lower0, ls = cfg.lower_slope;
    const double u0 = cfg.upper0, us = cfg.upper_slope;
    return TimeSpaceDomain::moving_interval(
        [l0, ls](double t) { return l0 + ls * t; },
        [u0, us](double t) { return u0 + us * t; }, cfg.horizon_t);
  }();

  if (!cfg.payoff_g) throw ConfigError("custom problems need a payoff g");
  feynman_kac::FeynmanKacProblem p;
  p.boundary_payoff = field_from(cfg.payoff_g);
  p.source = field_from(cfg.source_f);
  p.potential = field_from(cfg.potential_k);
  p.start = std::move(x0);
  p.horizon = cfg.open_horizon ? feynman_kac::kOpenHorizon
                               : geometry::Horizon(cfg.horizon_t);
  return ProblemBundle{std::move(model), std::move(domain), std::move(p),
                       std::nullopt};
}

}  // namespace stopdiff::cli
