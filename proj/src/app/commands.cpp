#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "nsctl/app.hpp"
#include "nsctl/error.hpp"
#include "nsctl/extension.hpp"
#include "nsctl/saturation.hpp"
#include "nsctl/sphere.hpp"
#include "nsctl/steering.hpp"

namespace nsctl::app {
namespace {

using nlohmann::json;

struct Context {
  Command command;
  LoadedConfig cfg;
  RunReport report;

  json meta() const {
    return {{"tool", "nsctl"},
            {"version", NSCTL_VERSION},
            {"command", to_string(command)},
            {"config_sha256", cfg.sha256},
            {"seed", cfg.seed}};
  }
  std::string comment() const {
    return std::string("nsctl version=") + NSCTL_VERSION + " command=" + to_string(command) +
           " config_sha256=" + cfg.sha256 + " seed=" + std::to_string(cfg.seed);
  }
  void write(const std::string& name, std::string_view content) {
    const auto path = cfg.out_dir / name;
    write_atomic(path, content);
    report.files.push_back(path.string());
  }
  void write_json(const std::string& name, json doc) {
    json out = {{"meta", meta()}};
    out.update(doc);
    write(name, out.dump(2) + "\n");
  }
};

const json& block(const Context& c, const char* key) {
  auto it = c.cfg.doc.find(key);
  if (it == c.cfg.doc.end())
    throw ConfigError(std::string("config has no '") + key + "' block for command " + to_string(c.command),
                      {{"/", std::string("missing '") + key + "'"}});
  return *it;
}

std::size_t label_index(const StructureTable& t, const std::string& label, const std::string& where) {
  ModeId m;
  try {
    m = ModeId::parse(label);
  } catch (const Error& e) {
    throw ConfigError(e.what(), {{where, e.what()}});
  }
  auto i = m.domain == t.domain() ? t.index_of(m) : std::nullopt;
  if (!i) throw ConfigError("mode " + label + " is not in the structure table", {{where, "outside the table"}});
  return *i;
}

std::vector<double> unit_vector(const StructureTable& t, std::size_t i) {
  std::vector<double> v(t.size(), 0.0);
  v[i] = 1.0;
  return v;
}

json lattice_json(const LatticeVec& v) { return json::array({v[0], v[1]}); }

ControlSignal controls_from(const json& list, const StructureTable& t, const std::string& where) {
  ControlSignal u;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& c = list[i];
    const std::string w = where + "/" + std::to_string(i);
    PiecewiseConstant pc{c.at("breaks").get<std::vector<double>>(), c.at("values").get<std::vector<double>>()};
    try {
      validate_profile(pc);
    } catch (const Error& e) {
      throw ConfigError(e.what(), {{w, e.what()}});
    }
    u.channels.push_back(ControlSignal::on_mode(label_index(t, c.at("mode").get<std::string>(), w + "/mode"), pc));
  }
  return u;
}

IntegrateOptions integrator_from(const json& b, IntegrateOptions base = {}) {
  base.abs_tol = b.value("abs_tol", base.abs_tol);
  base.rel_tol = b.value("rel_tol", base.rel_tol);
  return base;
}

ClosureOptions closure_options(const json& b) {
  ClosureOptions o;
  o.filter = b.value("filter", std::string("conservative")) == "permissive" ? SteadyFilter::permissive
                                                                            : SteadyFilter::conservative;
  o.max_steps = b.value("max_steps", o.max_steps);
  o.dim_cap = b.value("dim_cap", std::size_t{0});
  o.rank_tol = b.value("rank_tol", o.rank_tol);
  return o;
}

std::vector<std::string> labels_of(const StructureTable& t, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(t.mode(i).label());
  std::sort(out.begin(), out.end());
  return out;
}

json closure_json(const SpanClosure& c, const std::vector<json>& step_extra, const ClosureOptions& o) {
  json steps = json::array();
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    const auto& s = c.steps[i];
    json e = {{"j", s.j},
              {"added", s.added},
              {"dimension", s.dimension},
              {"steady_dimension", s.steady_dimension},
              {"truncated_growth", s.truncated_growth}};
    if (i < step_extra.size()) e.update(step_extra[i]);
    steps.push_back(e);
  }
  return {{"filter", to_string(o.filter)},
          {"rank_tol", o.rank_tol},
          {"max_steps", o.max_steps},
          {"dim_cap", o.dim_cap},
          {"steps", steps},
          {"stop", to_string(c.stop)},
          {"dimension", c.basis.dimension()}};
}

// --- saturate -------------------------------------------------------------

void run_saturate(Context& ctx) {
  const auto& b = block(ctx, "saturate");
  LatticeSet k;
  int norm = 0;
  for (const auto& v : b.at("set")) {
    const LatticeVec m{v[0].get<int>(), v[1].get<int>()};
    if (m == LatticeVec{0, 0}) throw ConfigError("lattice set contains the origin", {{"/saturate/set", "origin"}});
    k.insert(m);
    norm = std::max({norm, std::abs(m[0]), std::abs(m[1])});
  }
  const int box = b.value("box", std::max(10, norm));
  const int max_steps = b.value("max_steps", 50);
  if (box < norm)
    throw ConfigError("saturate.box is smaller than the largest set entry", {{"/saturate/box", "too small"}});
  const auto closure = lattice_saturation_closure(k, box, max_steps);
  const bool symmetric = is_symmetric(k);

  std::string verdict;
  switch (closure.verdict) {
    case ClosureVerdict::filled: verdict = "saturating"; break;
    case ClosureVerdict::not_filled: verdict = "not_saturating"; break;
    case ClosureVerdict::inconclusive: verdict = "inconclusive"; break;
  }
  // The gcd criterion is stated for symmetric sets only.
  std::string criterion = "not_applicable";
  if (symmetric) criterion = is_saturating_gcd(k) ? "saturating" : "not_saturating";
  json agrees = nullptr;
  if (symmetric && closure.verdict != ClosureVerdict::inconclusive) agrees = criterion == verdict;

  json input = json::array();
  for (const auto& m : k) input.push_back(lattice_json(m));
  json steps = json::array();
  for (const auto& s : closure.steps) {
    json added = json::array();
    for (const auto& m : s.added) added.push_back(lattice_json(m));
    steps.push_back({{"j", s.j}, {"added", added}, {"cumulative_size", s.cumulative_size}});
  }
  ctx.write_json("saturate.json", {{"input_set", input},
                                   {"box", box},
                                   {"max_steps", max_steps},
                                   {"symmetric", symmetric},
                                   {"steps", steps},
                                   {"fixpoint", closure.fixpoint},
                                   {"final_size", closure.set.size()},
                                   {"verdict", verdict},
                                   {"criterion_verdict", criterion},
                                   {"criterion_agrees", agrees}});
  ctx.report.summary = {{"verdict", verdict}, {"criterion_verdict", criterion}, {"criterion_agrees", agrees}};
  if (closure.verdict == ClosureVerdict::inconclusive) ctx.report.exit_code = exit_inconclusive;
}

// --- closure ----------------------------------------------------------------

void run_closure(Context& ctx) {
  const auto& b = block(ctx, "closure");
  const auto table = build_table(ctx.cfg.doc);
  const auto& t = *table;
  std::vector<std::vector<double>> gens;
  std::vector<std::string> gen_labels;
  for (std::size_t i = 0; i < b.at("generators").size(); ++i) {
    const auto label = b.at("generators")[i].get<std::string>();
    gens.push_back(unit_vector(t, label_index(t, label, "/closure/generators/" + std::to_string(i))));
    gen_labels.push_back(label);
  }
  const auto opt = closure_options(b);
  const double mode_tol = 1e3 * opt.rank_tol;
  std::vector<json> extra;
  const auto c = span_closure(gens, t, opt, [&](const SpanStep&, const SubspaceBasis& basis) {
    extra.push_back({{"modes", labels_of(t, contained_modes(basis, mode_tol))}});
  });

  json doc = {{"domain", to_string(t.domain())}, {"table_size", t.size()}, {"generators", gen_labels}};
  doc.update(closure_json(c, extra, opt));
  doc["contained_modes"] = labels_of(t, contained_modes(c.basis, mode_tol));
  if (b.contains("projected_modes")) {
    std::vector<std::size_t> l;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < b.at("projected_modes").size(); ++i) {
      const auto label = b.at("projected_modes")[i].get<std::string>();
      l.push_back(label_index(t, label, "/closure/projected_modes/" + std::to_string(i)));
      names.push_back(label);
    }
    const auto pr = projected_rank(c.basis, l, opt.rank_tol);
    doc["projected_rank"] = {{"modes", names}, {"rank", pr.rank}, {"full_rank", pr.full_rank}};
  }
  ctx.write_json("closure.json", doc);
  ctx.report.summary = {{"dimension", c.basis.dimension()}, {"stop", to_string(c.stop)}};
  if (doc.contains("projected_rank")) ctx.report.summary["projected_full_rank"] = doc["projected_rank"]["full_rank"];
  if (c.stop != ClosureStop::fixpoint) ctx.report.exit_code = exit_inconclusive;
}

// --- sphere-closure ---------------------------------------------------------

SpherePoly polynomial_from(const json& terms, const std::string& where) {
  SpherePoly p(3);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& term = terms[i];
    const auto e = term.at("exponents").get<std::vector<int>>();
    Rational c;
    try {
      c = Rational(term.at("coeff").get<std::string>());
    } catch (const std::exception&) {
      throw ConfigError("bad rational coefficient", {{where + "/terms/" + std::to_string(i) + "/coeff", "bad rational"}});
    }
    p.add_term(Exponents{e[0], e[1], e[2]}, c);
  }
  return p;
}

void run_sphere_closure(Context& ctx) {
  if (ctx.cfg.doc.at("domain") != "sphere")
    throw ConfigError("sphere-closure needs domain sphere", {{"/domain", "must be 'sphere'"}});
  const auto& b = block(ctx, "sphere_closure");
  const auto table = build_table(ctx.cfg.doc);
  const auto& t = *table;
  std::vector<std::vector<double>> gens;
  json gen_doc = json::array();
  for (std::size_t i = 0; i < b.at("generators").size(); ++i) {
    const auto& g = b.at("generators")[i];
    const std::string where = "/sphere_closure/generators/" + std::to_string(i);
    if (g.is_string()) {
      gens.push_back(unit_vector(t, label_index(t, g.get<std::string>(), where)));
      gen_doc.push_back(g);
      continue;
    }
    const auto p = polynomial_from(g.at("terms"), where);
    double dropped = 0.0;
    gens.push_back(sphere_coordinates(p, t, &dropped));
    if (dropped != 0.0)
      throw ConfigError("generator has harmonic components outside the table (constant or degree too high)",
                        {{where, "not representable in the table"}});
    gen_doc.push_back(to_string(p));
  }
  int max_degree = 0;
  for (const auto& m : t.modes()) max_degree = std::max(max_degree, m.degree());
  std::map<int, std::vector<std::size_t>> by_degree;
  for (std::size_t i = 0; i < t.size(); ++i) by_degree[t.mode(i).degree()].push_back(i);

  const auto opt = closure_options(b);
  std::vector<json> extra;
  const auto c = span_closure(gens, t, opt, [&](const SpanStep&, const SubspaceBasis& basis) {
    json ranks = json::object();
    for (const auto& [d, idx] : by_degree) ranks[std::to_string(d)] = projected_rank(basis, idx, opt.rank_tol).rank;
    extra.push_back({{"degree_ranks", ranks}});
  });
  std::size_t full = 0;
  for (int d = 1; d <= max_degree; ++d) full += static_cast<std::size_t>(2 * d + 1);

  json doc = {{"max_degree", max_degree}, {"table_size", t.size()}, {"generators", gen_doc}};
  doc.update(closure_json(c, extra, opt));
  doc["saturated"] = c.basis.dimension() == full;
  ctx.write_json("sphere_closure.json", doc);
  ctx.report.summary = {{"dimension", c.basis.dimension()}, {"full_dimension", full}, {"stop", to_string(c.stop)}};
  if (c.stop != ClosureStop::fixpoint) ctx.report.exit_code = exit_inconclusive;
}

// --- simulate ---------------------------------------------------------------

void run_simulate(Context& ctx) {
  const auto& b = block(ctx, "simulate");
  const auto sys = build_system(ctx.cfg.doc, build_table(ctx.cfg.doc));
  const auto q0 = state_from_map(sys, b.value("q0", json::object()), "/simulate/q0");
  const auto u = controls_from(b.value("controls", json::array()), sys.table(), "/simulate/controls");
  IntegrateOptions opt = integrator_from(b);
  opt.samples = b.value("samples", std::size_t{100});
  const double horizon = b.at("horizon").get<double>();
  const auto traj = integrate(sys, q0, u, horizon, opt);
  ctx.write("trajectory.csv", trajectory_csv(sys, traj, ctx.comment()));
  const auto& d = traj.diagnostics;
  ctx.write_json("simulate.json", {{"labels", sys.labels()},
                                   {"horizon", horizon},
                                   {"samples", traj.times.size()},
                                   {"endpoint", traj.endpoint()},
                                   {"energy", {d.front().energy, d.back().energy}},
                                   {"enstrophy", {d.front().enstrophy, d.back().enstrophy}},
                                   {"accepted_steps", traj.accepted_steps},
                                   {"rejected_steps", traj.rejected_steps}});
  ctx.report.summary = {{"samples", traj.times.size()}, {"energy_end", d.back().energy}};
}

// --- steer ------------------------------------------------------------------

std::vector<double> random_target(std::size_t n, double radius, std::uint64_t seed) {
  // Uniform in the ball: Gaussian direction, radius ~ R u^(1/n).
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = nd(rng);
    s += x * x;
  }
  const double r = radius * std::pow(ud(rng), 1.0 / static_cast<double>(n)) / std::sqrt(s);
  for (auto& x : v) x *= r;
  return v;
}

void run_steer(Context& ctx) {
  const auto& b = block(ctx, "steer");
  const auto sys = build_system(ctx.cfg.doc, build_table(ctx.cfg.doc));
  if (sys.controlled().empty())
    throw ConfigError("steer needs at least one controlled mode", {{"/controlled", "empty"}});
  const auto q_start = state_from_map(sys, b.value("q_start", json::object()), "/steer/q_start");
  if (b.contains("q_target") == b.contains("random_target"))
    throw ConfigError("steer needs exactly one of q_target and random_target", {{"/steer", "target"}});
  const auto target = b.contains("q_target")
                          ? state_from_map(sys, b.at("q_target"), "/steer/q_target")
                          : random_target(sys.dimension(), b.at("random_target").at("radius").get<double>(),
                                          ctx.cfg.seed);
  SteerOptions opt;
  opt.segments = b.value("segments", opt.segments);
  opt.tol = b.value("tol", opt.tol);
  opt.max_iter = b.value("max_iter", opt.max_iter);
  opt.restarts = b.value("restarts", opt.restarts);
  opt.batch = b.value("batch", opt.batch);
  opt.amplitude_bound = b.value("amplitude_bound", opt.amplitude_bound);
  opt.init_scale = b.value("init_scale", opt.init_scale);
  opt.seed = ctx.cfg.seed;
  opt.integrator = integrator_from(b, opt.integrator);
  const double horizon = b.at("horizon").get<double>();
  const auto res = steer(sys, q_start, target, horizon, opt);

  std::vector<std::string> control_modes;
  for (std::size_t i : sys.controlled()) control_modes.push_back(sys.table().mode(i).label());
  ctx.write_json("steer.json", {{"labels", sys.labels()},
                                {"horizon", horizon},
                                {"segments", opt.segments},
                                {"tol", opt.tol},
                                {"q_start", q_start},
                                {"target", target},
                                {"residual", res.residual},
                                {"converged", res.converged},
                                {"iterations", res.iterations},
                                {"restarts_used", res.restarts_used},
                                {"residual_history", res.history},
                                {"control_modes", control_modes},
                                {"controls", res.controls},
                                {"endpoint", res.endpoint},
                                {"seed", res.seed}});
  ctx.report.summary = {{"residual", res.residual}, {"converged", res.converged}, {"iterations", res.iterations}};
  if (!res.converged) ctx.report.exit_code = exit_inconclusive;
}

// --- extend-verify ----------------------------------------------------------

void run_extend_verify(Context& ctx) {
  const auto& b = block(ctx, "extend_verify");
  const auto table = build_table(ctx.cfg.doc);
  const auto base = build_system(ctx.cfg.doc, table);
  ExtensionExperiment exp;
  exp.table = table;
  exp.observed = base.observed();
  exp.controlled = base.controlled();
  exp.nu = base.nu();
  exp.r = label_index(*table, b.at("r").get<std::string>(), "/extend_verify/r");
  exp.s = label_index(*table, b.at("s").get<std::string>(), "/extend_verify/s");
  auto linear = [](const json& j) {
    return PiecewiseLinear{j.at("times").get<std::vector<double>>(), j.at("values").get<std::vector<double>>()};
  };
  exp.envelope_r = linear(b.at("envelope_r"));
  exp.envelope_s = linear(b.at("envelope_s"));
  exp.background = controls_from(b.value("background", json::array()), *table, "/extend_verify/background");
  exp.q0 = state_from_map(base, b.value("q0", json::object()), "/extend_verify/q0");
  exp.eps = b.at("epsilons").get<std::vector<double>>();
  exp.horizon = b.at("horizon").get<double>();
  exp.integrator = integrator_from(b);
  exp.integrator.steps_per_carrier = b.value("steps_per_carrier", exp.integrator.steps_per_carrier);

  const auto limit = build_limit_system(exp);
  const auto run = run_extension_experiment(exp);

  std::string csv = "# " + ctx.comment() + "\nepsilon,endpoint_error\n";
  json points = json::array();
  std::vector<std::pair<double, double>> fit_points;
  bool any_failed = false;
  for (const auto& p : run.points) {
    csv += format_double(p.eps) + "," + (p.failed ? std::string("nan") : format_double(p.error)) + "\n";
    json e = {{"epsilon", p.eps}, {"failed", p.failed}, {"steps", p.steps}};
    e["endpoint_error"] = p.failed ? json(nullptr) : json(p.error);
    if (p.failed) e["failure"] = p.failure;
    points.push_back(e);
    if (p.failed) any_failed = true;
    else fit_points.emplace_back(p.eps, p.error);
  }
  bool monotone = !any_failed;
  for (std::size_t i = 1; i < run.points.size(); ++i)
    monotone = monotone && run.points[i].error < run.points[i - 1].error;

  json slope = nullptr, fit = nullptr;
  if (fit_points.size() >= 3) {
    const auto f = convergence_order(fit_points);
    slope = f.slope;
    fit = {{"slope", f.slope}, {"intercept", f.intercept}, {"used", f.used}, {"flagged", f.flagged}};
  }
  std::vector<json> direction;
  for (const auto& [i, c] : limit.direction) direction.push_back({{"mode", table->mode(i).label()}, {"coeff", c}});

  ctx.write("extend_verify.csv", csv);
  ctx.write_json("extend_verify.json", {{"r", b.at("r")},
                                        {"s", b.at("s")},
                                        {"bracket_coefficient", limit.bracket_coefficient},
                                        {"limit_direction", direction},
                                        {"horizon", exp.horizon},
                                        {"points", points},
                                        {"strictly_decreasing", monotone},
                                        {"slope", slope},
                                        {"fit", fit},
                                        {"limit_endpoint", run.limit_endpoint}});
  ctx.report.summary = {{"slope", slope}, {"strictly_decreasing", monotone}, {"points", run.points.size()}};
  if (any_failed) ctx.report.exit_code = exit_numerical;
}

// --- export-table -----------------------------------------------------------

void run_export_table(Context& ctx) {
  const auto table = build_table(ctx.cfg.doc);
  json doc = table->to_json();
  ctx.write_json("table.json", {{"table", doc}});
  ctx.report.summary = {{"modes", table->size()}};
}

int exit_for(ErrorKind k) { return k == ErrorKind::numerical ? exit_numerical : exit_validation; }

json error_json(const char* kind, int code, const std::string& message) {
  return {{"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}};
}

}  // namespace

RunReport run(const RunRequest& request) {
  Context ctx{request.command, {}, {}};
  try {
    ctx.cfg = load_config(request.config_path, request.seed, request.out_dir);
    switch (request.command) {
      case Command::saturate: run_saturate(ctx); break;
      case Command::closure: run_closure(ctx); break;
      case Command::simulate: run_simulate(ctx); break;
      case Command::steer: run_steer(ctx); break;
      case Command::extend_verify: run_extend_verify(ctx); break;
      case Command::sphere_closure: run_sphere_closure(ctx); break;
      case Command::export_table: run_export_table(ctx); break;
    }
  } catch (const ConfigError& e) {
    ctx.report.exit_code = exit_validation;
    ctx.report.error = error_json("config", exit_validation, e.what());
    json issues = json::array();
    for (const auto& i : e.issues()) issues.push_back({{"path", i.path}, {"message", i.message}});
    ctx.report.error["error"]["issues"] = issues;
  } catch (const Error& e) {
    ctx.report.exit_code = exit_for(e.kind());
    ctx.report.error = error_json(nsctl::to_string(e.kind()), ctx.report.exit_code, e.what());
  } catch (const std::exception& e) {
    ctx.report.exit_code = exit_numerical;
    ctx.report.error = error_json("internal", exit_numerical, e.what());
  }
  if (!ctx.report.error.is_null()) ctx.report.error["error"]["command"] = to_string(request.command);
  ctx.report.summary["command"] = to_string(request.command);
  ctx.report.summary["exit_code"] = ctx.report.exit_code;
  ctx.report.summary["files"] = ctx.report.files;
  return ctx.report;
}

}  // namespace nsctl::app
