#include "nsctl/extension.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace nsctl {
namespace {

void check_envelope(const PiecewiseLinear& e, double horizon, const char* name) {
  validate_profile(e);
  if (e.value(0.0) != 0.0 || e.value(horizon) != 0.0)
    throw Error(ErrorKind::configuration, std::string(name) + " envelope must vanish at 0 and at the horizon");
}

void check_experiment(const ExtensionExperiment& exp) {
  if (!exp.table) throw Error(ErrorKind::configuration, "extension experiment needs a structure table");
  if (!(exp.horizon > 0.0)) throw Error(ErrorKind::configuration, "horizon must be positive");
  if (exp.r == exp.s) throw Error(ErrorKind::configuration, "source modes r and s must differ");
  for (std::size_t m : {exp.r, exp.s})
    if (std::find(exp.controlled.begin(), exp.controlled.end(), m) == exp.controlled.end())
      throw Error(ErrorKind::configuration, "source modes must be controlled");
  check_envelope(exp.envelope_r, exp.horizon, "r");
  check_envelope(exp.envelope_s, exp.horizon, "s");
  const auto& t = *exp.table;
  if (t.domain() == Domain::torus) {
    const auto& kr = t.mode(exp.r).k;
    const auto& ks = t.mode(exp.s).k;
    if (wedge(kr, ks) == 0) throw Error(ErrorKind::configuration, "r ^ s = 0: bracket coefficient vanishes");
    if (kr[0] * kr[0] + kr[1] * kr[1] == ks[0] * ks[0] + ks[1] * ks[1])
      throw Error(ErrorKind::configuration, "|r| = |s|: bracket coefficient vanishes");
    const std::array<int, 2> sum{kr[0] + ks[0], kr[1] + ks[1]};
    for (std::size_t c : exp.controlled)
      if (t.mode(c).k == sum) throw Error(ErrorKind::configuration, "r + s must not be a controlled mode");
  }
  for (std::size_t i = 0; i < exp.eps.size(); ++i) {
    if (!(exp.eps[i] >= 1e-3)) throw Error(ErrorKind::configuration, "epsilon values must be >= 1e-3");
    if (i > 0 && !(exp.eps[i] < exp.eps[i - 1]))
      throw Error(ErrorKind::configuration, "epsilon list must be strictly decreasing");
  }
}

std::vector<double> initial_state(const ExtensionExperiment& exp, const GalerkinSystem& sys) {
  if (exp.q0.empty()) return std::vector<double>(sys.dimension(), 0.0);
  if (exp.q0.size() != sys.dimension()) throw Error(ErrorKind::configuration, "initial state dimension mismatch");
  return exp.q0;
}

}  // namespace

std::pair<GalerkinSystem, ControlSignal> build_oscillatory_system(const ExtensionExperiment& exp, double eps) {
  check_experiment(exp);
  GalerkinSystem sys(exp.table, exp.observed, exp.controlled, exp.nu);
  ControlSignal u = exp.background;
  u.channels.push_back(ControlSignal::on_mode(exp.r, OscillatoryDerivative{1.0 / eps, eps, exp.envelope_r}));
  u.channels.push_back(ControlSignal::on_mode(exp.s, OscillatoryDerivative{eps, eps, exp.envelope_s}));
  return {std::move(sys), std::move(u)};
}

LimitSystem build_limit_system(const ExtensionExperiment& exp) {
  check_experiment(exp);
  const auto& t = *exp.table;
  std::vector<double> er(t.size(), 0.0), es(t.size(), 0.0);
  er[exp.r] = 1.0;
  es[exp.s] = 1.0;
  const auto b = bracket_B(er, es, t);
  const GalerkinSystem base(exp.table, exp.observed, exp.controlled, exp.nu);

  std::vector<std::pair<std::size_t, double>> direction;
  for (std::size_t i : base.observed())
    if (b.value[i] != 0.0) direction.emplace_back(i, b.value[i]);
  std::sort(direction.begin(), direction.end());
  if (direction.empty())
    throw Error(ErrorKind::configuration, "bracket direction B(e_r, e_s) vanishes on the observed modes");

  std::vector<std::size_t> controlled = exp.controlled;
  for (const auto& [i, c] : direction) controlled.push_back(i);

  double coefficient = 0.0;
  if (t.domain() == Domain::torus) {
    const auto& kr = t.mode(exp.r).k;
    const auto& ks = t.mode(exp.s).k;
    coefficient = wedge(kr, ks) * (1.0 / (kr[0] * kr[0] + kr[1] * kr[1]) - 1.0 / (ks[0] * ks[0] + ks[1] * ks[1]));
  } else {
    const auto lam = t.eigenvalues();
    coefficient = 1.0 / lam[exp.r] - 1.0 / lam[exp.s];
  }

  ControlSignal u = exp.background;
  u.channels.push_back(ControlChannel{direction, EnvelopeProduct{exp.envelope_r, exp.envelope_s}});
  return LimitSystem{base.with_controlled(std::move(controlled)), std::move(u), std::move(direction), coefficient};
}

ExtensionRun run_extension_experiment(const ExtensionExperiment& exp) {
  const LimitSystem limit = build_limit_system(exp);
  ExtensionRun run;
  run.limit_endpoint =
      integrate(limit.system, initial_state(exp, limit.system), limit.control, exp.horizon, exp.integrator).endpoint();

  auto member = [&](double eps) {
    ExtensionPoint p;
    p.eps = eps;
    try {
      auto [sys, u] = build_oscillatory_system(exp, eps);
      const auto tr = integrate(sys, initial_state(exp, sys), u, exp.horizon, exp.integrator);
      const auto& x = tr.endpoint();
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - run.limit_endpoint[i]) * (x[i] - run.limit_endpoint[i]);
      p.error = std::sqrt(s);
      p.steps = tr.accepted_steps;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numerical) throw;
      p.failed = true;
      p.failure = e.what();
    }
    return p;
  };

  std::vector<std::future<ExtensionPoint>> jobs;
  for (double eps : exp.eps) jobs.push_back(std::async(std::launch::async, member, eps));
  for (auto& j : jobs) run.points.push_back(j.get());
  return run;
}

SlopeFit convergence_order(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw Error(ErrorKind::invalid_argument, "convergence fit needs at least 3 points");
  SlopeFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [eps, e] : points) {
    if (!(eps > 0.0) || !(e > 0.0) || !std::isfinite(e) || !std::isfinite(eps)) {
      fit.flagged = true;
      continue;
    }
    const double x = std::log(eps), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.used;
  }
  if (fit.used < 2) throw Error(ErrorKind::numerical, "fewer than two positive errors to fit");
  const double n = static_cast<double>(fit.used);
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw Error(ErrorKind::numerical, "degenerate epsilon values in convergence fit");
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

ExtensionExperiment canonical_extension_experiment() {
  ExtensionExperiment exp;
  exp.table = std::make_shared<const StructureTable>(StructureTable::torus(2));
  const auto& t = *exp.table;
  for (auto k : {std::array<int, 2>{1, 0}, {0, 1}, {1, 1}, {1, -1}})
    for (auto p : {Parity::cos, Parity::sin}) exp.observed.push_back(t.require_index(ModeId::torus(k[0], k[1], p)));
  exp.observed.push_back(t.require_index(ModeId::torus(2, 1, Parity::cos)));
  exp.r = t.require_index(ModeId::torus(1, 0, Parity::cos));
  exp.s = t.require_index(ModeId::torus(1, 1, Parity::cos));
  exp.controlled = {exp.r, exp.s};
  exp.nu = 0.1;
  exp.horizon = 1.0;
  exp.envelope_r = PiecewiseLinear{{0.0, 0.5, 1.0}, {0.0, 1.0, 0.0}};
  exp.envelope_s = exp.envelope_r;
  exp.eps = {0.2, 0.1, 0.05, 0.025};
  return exp;
}

}  // namespace nsctl
