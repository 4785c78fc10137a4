#include "nsctl/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>

namespace nsctl {
namespace {

using State = std::vector<double>;

void check_increasing(const std::vector<double>& t, const char* what) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw Error(ErrorKind::configuration, std::string(what) + " must be strictly increasing");
  for (double x : t)
    if (!std::isfinite(x)) throw Error(ErrorKind::configuration, std::string(what) + " must be finite");
}

void validate_linear(const PiecewiseLinear& p) {
  if (p.times.size() < 2 || p.times.size() != p.values.size())
    throw Error(ErrorKind::configuration, "piecewise-linear profile needs matching times/values (>= 2 points)");
  check_increasing(p.times, "profile times");
  for (double v : p.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::configuration, "profile values must be finite");
}

}  // namespace

double PiecewiseLinear::value(double t) const {
  if (times.empty() || t < times.front() || t > times.back()) return 0.0;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.end()) return values.back();
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double s = (t - times[i]) / (times[i + 1] - times[i]);
  return values[i] + s * (values[i + 1] - values[i]);
}

double PiecewiseLinear::slope(double t) const {
  if (times.empty() || t < times.front() || t >= times.back()) return 0.0;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  return (values[i + 1] - values[i]) / (times[i + 1] - times[i]);
}

double PiecewiseLinear::value_on(double t, double locate) const {
  if (times.empty() || locate < times.front() || locate >= times.back()) return 0.0;
  auto it = std::upper_bound(times.begin(), times.end(), locate);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double s = (t - times[i]) / (times[i + 1] - times[i]);
  return values[i] + s * (values[i + 1] - values[i]);
}

double PiecewiseLinear::slope_on(double locate) const { return slope(locate); }

double profile_value(const Profile& p, double t) {
  struct Visitor {
    double t;
    double operator()(const PiecewiseConstant& c) const {
      if (c.values.empty() || t < c.breaks.front() || t > c.breaks.back()) return 0.0;
      auto it = std::upper_bound(c.breaks.begin(), c.breaks.end(), t);
      std::size_t i = static_cast<std::size_t>(it - c.breaks.begin());
      i = i == 0 ? 0 : i - 1;
      return c.values[std::min(i, c.values.size() - 1)];
    }
    double operator()(const PiecewiseLinear& l) const { return l.value(t); }
    double operator()(const OscillatoryDerivative& o) const {
      const double w = 1.0 / (o.eps * o.eps);
      const double phase = t * w;
      return o.scale * std::numbers::sqrt2 *
             (w * std::cos(phase) * o.envelope.value(t) + std::sin(phase) * o.envelope.slope(t));
    }
    double operator()(const EnvelopeProduct& e) const { return e.a.value(t) * e.b.value(t); }
  };
  return std::visit(Visitor{t}, p);
}

double profile_value(const Profile& p, double t, double locate) {
  struct Visitor {
    double t, at;
    double operator()(const PiecewiseConstant& c) const {
      if (c.values.empty() || at < c.breaks.front() || at >= c.breaks.back()) return 0.0;
      auto it = std::upper_bound(c.breaks.begin(), c.breaks.end(), at);
      return c.values[static_cast<std::size_t>(it - c.breaks.begin()) - 1];
    }
    double operator()(const PiecewiseLinear& l) const { return l.value_on(t, at); }
    double operator()(const OscillatoryDerivative& o) const {
      const double w = 1.0 / (o.eps * o.eps);
      const double phase = t * w;
      return o.scale * std::numbers::sqrt2 *
             (w * std::cos(phase) * o.envelope.value_on(t, at) + std::sin(phase) * o.envelope.slope_on(at));
    }
    double operator()(const EnvelopeProduct& e) const { return e.a.value_on(t, at) * e.b.value_on(t, at); }
  };
  return std::visit(Visitor{t, locate}, p);
}

std::vector<double> profile_breaks(const Profile& p) {
  struct Visitor {
    std::vector<double> operator()(const PiecewiseConstant& c) const { return c.breaks; }
    std::vector<double> operator()(const PiecewiseLinear& l) const { return l.times; }
    std::vector<double> operator()(const OscillatoryDerivative& o) const { return o.envelope.times; }
    std::vector<double> operator()(const EnvelopeProduct& e) const {
      auto out = e.a.times;
      out.insert(out.end(), e.b.times.begin(), e.b.times.end());
      return out;
    }
  };
  return std::visit(Visitor{}, p);
}

std::optional<double> profile_carrier_period(const Profile& p) {
  if (const auto* o = std::get_if<OscillatoryDerivative>(&p)) return 2.0 * std::numbers::pi * o->eps * o->eps;
  return std::nullopt;
}

void validate_profile(const Profile& p) {
  struct Visitor {
    void operator()(const PiecewiseConstant& c) const {
      if (c.values.empty() || c.breaks.size() != c.values.size() + 1)
        throw Error(ErrorKind::configuration, "piecewise-constant profile needs P values and P+1 breakpoints");
      check_increasing(c.breaks, "breakpoints");
      for (double v : c.values)
        if (!std::isfinite(v)) throw Error(ErrorKind::configuration, "control values must be finite");
    }
    void operator()(const PiecewiseLinear& l) const { validate_linear(l); }
    void operator()(const OscillatoryDerivative& o) const {
      if (!(o.eps > 0.0) || !std::isfinite(o.eps)) throw Error(ErrorKind::configuration, "epsilon must be positive");
      if (!std::isfinite(o.scale)) throw Error(ErrorKind::configuration, "oscillatory scale must be finite");
      validate_linear(o.envelope);
    }
    void operator()(const EnvelopeProduct& e) const {
      validate_linear(e.a);
      validate_linear(e.b);
    }
  };
  std::visit(Visitor{}, p);
}

void BoundControl::add_forcing(double t, double locate, std::span<double> dq) const {
  for (const auto& ch : channels_) {
    const double v = profile_value(ch.profile, t, locate);
    if (v == 0.0) continue;
    for (const auto& [i, c] : ch.direction) dq[i] += c * v;
  }
}

GalerkinSystem::GalerkinSystem(std::shared_ptr<const StructureTable> table, std::vector<std::size_t> observed,
                               std::vector<std::size_t> controlled, double nu)
    : table_(std::move(table)), controlled_(std::move(controlled)), nu_(nu) {
  if (!table_) throw Error(ErrorKind::invalid_argument, "Galerkin system needs a structure table");
  if (observed.empty()) throw Error(ErrorKind::validation, "observed mode set is empty");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw Error(ErrorKind::validation, "viscosity must be finite and >= 0");
  const std::size_t n = table_->size();
  std::sort(observed.begin(), observed.end());
  if (std::adjacent_find(observed.begin(), observed.end()) != observed.end())
    throw Error(ErrorKind::validation, "observed mode set has duplicates");
  for (std::size_t i : observed)
    if (i >= n) throw Error(ErrorKind::validation, "observed mode index out of range");
  std::sort(observed.begin(), observed.end(),
            [&](std::size_t a, std::size_t b) { return table_->mode(a).label() < table_->mode(b).label(); });
  observed_ = std::move(observed);
  local_.assign(n, -1);
  for (std::size_t l = 0; l < observed_.size(); ++l) local_[observed_[l]] = static_cast<long>(l);

  std::sort(controlled_.begin(), controlled_.end());
  controlled_.erase(std::unique(controlled_.begin(), controlled_.end()), controlled_.end());
  for (std::size_t i : controlled_)
    if (i >= n || local_[i] < 0) throw Error(ErrorKind::validation, "controlled modes must be observed");

  const auto lam = table_->eigenvalues();
  for (std::size_t i : observed_) lambda_.push_back(lam[i]);
  for (std::size_t a = 0; a < observed_.size(); ++a)
    for (std::size_t b = 0; b < observed_.size(); ++b) {
      if (a == b) continue;
      for (const auto& t : table_->bracket(observed_[a], observed_[b])) {
        const long k = local_[t.mode];
        if (k < 0) continue;
        triads_.push_back({a, b, static_cast<std::size_t>(k), t.coeff / lambda_[a]});
      }
    }
}

std::vector<std::string> GalerkinSystem::labels() const {
  std::vector<std::string> out;
  for (std::size_t i : observed_) out.push_back(table_->mode(i).label());
  return out;
}

std::optional<std::size_t> GalerkinSystem::local_index(std::size_t table_index) const {
  if (table_index >= local_.size() || local_[table_index] < 0) return std::nullopt;
  return static_cast<std::size_t>(local_[table_index]);
}

std::size_t GalerkinSystem::require_local(std::size_t table_index) const {
  if (auto l = local_index(table_index)) return *l;
  throw Error(ErrorKind::configuration, "mode is not observed by this system");
}

BoundControl GalerkinSystem::bind(const ControlSignal& u) const {
  BoundControl b;
  for (const auto& ch : u.channels) {
    validate_profile(ch.profile);
    BoundControl::Channel bc{{}, ch.profile};
    for (const auto& [i, c] : ch.direction) {
      if (c == 0.0) continue;
      if (!std::binary_search(controlled_.begin(), controlled_.end(), i))
        throw Error(ErrorKind::configuration,
                    "control references mode " +
                        (i < table_->size() ? table_->mode(i).label() : std::to_string(i)) +
                        " outside the controlled set");
      bc.direction.emplace_back(static_cast<std::size_t>(local_[i]), c);
    }
    // An identically zero channel must not perturb the step sequence.
    if (bc.direction.empty()) continue;
    if (const auto* pc = std::get_if<PiecewiseConstant>(&ch.profile))
      if (std::all_of(pc->values.begin(), pc->values.end(), [](double v) { return v == 0.0; })) continue;
    for (double t : profile_breaks(ch.profile)) b.breaks_.push_back(t);
    if (auto p = profile_carrier_period(ch.profile)) b.carrier_ = b.carrier_ ? std::min(*b.carrier_, *p) : *p;
    b.channels_.push_back(std::move(bc));
  }
  std::sort(b.breaks_.begin(), b.breaks_.end());
  b.breaks_.erase(std::unique(b.breaks_.begin(), b.breaks_.end()), b.breaks_.end());
  return b;
}

void GalerkinSystem::drift(std::span<const double> q, std::span<double> dq) const {
  const std::size_t n = observed_.size();
  if (q.size() != n || dq.size() != n) throw Error(ErrorKind::invalid_argument, "state dimension mismatch");
  for (std::size_t k = 0; k < n; ++k) dq[k] = nu_ * lambda_[k] * q[k];
  for (const auto& t : triads_) dq[t.k] += t.w * q[t.i] * q[t.j];
}

void GalerkinSystem::rhs(std::span<const double> q, double t, double locate, const BoundControl& u,
                         std::span<double> dq) const {
  drift(q, dq);
  u.add_forcing(t, locate, dq);
}

std::vector<double> GalerkinSystem::rhs(std::span<const double> q, double t, const ControlSignal& u) const {
  std::vector<double> dq(observed_.size());
  rhs(q, t, bind(u), dq);
  return dq;
}

Diagnostics GalerkinSystem::diagnostics(std::span<const double> q) const {
  Diagnostics d;
  for (std::size_t k = 0; k < q.size(); ++k) {
    d.energy += 0.5 * q[k] * q[k] / std::abs(lambda_[k]);
    d.enstrophy += 0.5 * q[k] * q[k];
  }
  return d;
}

GalerkinSystem GalerkinSystem::with_controlled(std::vector<std::size_t> controlled) const {
  return GalerkinSystem(table_, observed_, std::move(controlled), nu_);
}

Trajectory integrate(const GalerkinSystem& sys, std::span<const double> q0, const ControlSignal& u, double t_end,
                     const IntegrateOptions& options) {
  namespace ode = boost::numeric::odeint;
  const std::size_t n = sys.dimension();
  if (q0.size() != n) throw Error(ErrorKind::invalid_argument, "initial state dimension mismatch");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::invalid_argument, "horizon must be positive");
  if (!(options.abs_tol > 0.0) || !(options.rel_tol > 0.0))
    throw Error(ErrorKind::invalid_argument, "integrator tolerances must be positive");
  for (double x : q0)
    if (!std::isfinite(x)) throw Error(ErrorKind::invalid_argument, "initial state must be finite");

  const BoundControl bound = sys.bind(u);
  double max_dt = options.max_dt > 0.0 ? options.max_dt : t_end;
  if (auto period = bound.carrier_period())
    max_dt = std::min(max_dt, *period / std::max(1, options.steps_per_carrier));

  // Stop times: samples, control breakpoints, and the horizon.
  std::vector<double> stops;
  for (std::size_t s = 1; s <= options.samples; ++s) stops.push_back(t_end * static_cast<double>(s) / options.samples);
  std::vector<double> sample_times = stops;
  for (double b : bound.breaks())
    if (b > 0.0 && b < t_end) stops.push_back(b);
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  // Every stop interval lies inside one piece of each profile; controls are
  // looked up by the interval midpoint so end-of-step stages stay on it.
  double locate = 0.0;
  auto system = [&](const State& x, State& dxdt, double t) { sys.rhs(x, t, locate, bound, dxdt); };
  using Stepper = ode::runge_kutta_dopri5<State>;
  auto controlled = ode::make_controlled(options.abs_tol, options.rel_tol, Stepper());

  Trajectory traj;
  State x(q0.begin(), q0.end());
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  traj.diagnostics.push_back(sys.diagnostics(x));

  double t = 0.0;
  double dt = std::min(max_dt, 1e-3 * t_end);
  std::size_t next_sample = 0;
  double prev_stop = 0.0;
  for (double stop : stops) {
    locate = 0.5 * (prev_stop + stop);
    prev_stop = stop;
    // Derivatives may jump at a stop; drop the FSAL carry-over.
    controlled.reset();
    while (t < stop) {
      const bool clipped = dt >= stop - t;
      double h = clipped ? stop - t : dt;
      const double t_before = t;
      const auto res = controlled.try_step(system, x, t, h);
      if (res == ode::success) {
        ++traj.accepted_steps;
        if (clipped || std::abs(stop - t) <= 1e-13 * std::max(1.0, std::abs(stop))) t = stop;
        for (double v : x)
          if (!std::isfinite(v))
            throw Error(ErrorKind::numerical, "state became non-finite at t=" + std::to_string(t_before));
        if (!clipped) dt = std::min(h, max_dt);
        else dt = std::min(std::max(dt, h), max_dt);
      } else {
        ++traj.rejected_steps;
        dt = h;
        if (dt < 1e-14 * std::max(1.0, std::abs(t)))
          throw Error(ErrorKind::numerical,
                      "step size underflow at t=" + std::to_string(t) + " (stiff or unstable dynamics)");
      }
    }
    while (next_sample < sample_times.size() && sample_times[next_sample] <= stop) {
      if (sample_times[next_sample] == stop) {
        traj.times.push_back(stop);
        traj.states.push_back(x);
        traj.diagnostics.push_back(sys.diagnostics(x));
      }
      ++next_sample;
    }
  }
  if (traj.times.back() != t_end) {
    traj.times.push_back(t_end);
    traj.states.push_back(x);
    traj.diagnostics.push_back(sys.diagnostics(x));
  }
  return traj;
}

std::vector<double> integrate_fixed(const GalerkinSystem& sys, std::span<const double> q0, const ControlSignal& u,
                                    double t_end, std::size_t steps) {
  namespace ode = boost::numeric::odeint;
  if (q0.size() != sys.dimension()) throw Error(ErrorKind::invalid_argument, "initial state dimension mismatch");
  if (steps == 0 || !(t_end > 0.0)) throw Error(ErrorKind::invalid_argument, "need a positive horizon and step count");
  const BoundControl bound = sys.bind(u);
  const double h = t_end / static_cast<double>(steps);
  double locate = 0.0;
  auto system = [&](const State& x, State& dxdt, double t) { sys.rhs(x, t, locate, bound, dxdt); };
  ode::runge_kutta4<State> stepper;
  State x(q0.begin(), q0.end());
  for (std::size_t s = 0; s < steps; ++s) {
    const double t0 = h * static_cast<double>(s);
    locate = t0 + 0.5 * h;
    stepper.do_step(system, x, t0, h);
  }
  return x;
}

std::vector<std::size_t> modes_within(const StructureTable& table, int box) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& m = table.mode(i);
    bool keep = box <= 0;
    if (!keep) {
      if (m.domain == Domain::sphere) keep = m.degree() <= box;
      else keep = std::abs(m.k[0]) <= box && std::abs(m.k[1]) <= box;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

}  // namespace nsctl
