#include "nsctl/steering.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <random>
#include <thread>
#include <utility>

#include <Eigen/Dense>

namespace nsctl {
namespace {

// Incremental row echelon form over sparse coefficient vectors, used to drop
// brackets that are constant-coefficient combinations of earlier ones.
class Echelon {
 public:
  using Key = std::pair<std::size_t, Exponents>;
  using Row = std::map<Key, double>;

  explicit Echelon(double tol) : tol_(tol) {}

  bool add(const VectorField& f) {
    Row v;
    double scale = 0.0;
    for (std::size_t i = 0; i < f.comps.size(); ++i)
      for (const auto& [e, c] : f.comps[i].terms()) {
        v.emplace(Key{i, e}, c);
        scale = std::max(scale, std::abs(c));
      }
    if (scale == 0.0) return false;
    const double cut = tol_ * scale;
    while (!v.empty()) {
      auto lead = v.begin();
      if (std::abs(lead->second) <= cut) {
        v.erase(lead);
        continue;
      }
      auto piv = pivots_.find(lead->first);
      if (piv == pivots_.end()) {
        pivots_.emplace(lead->first, std::move(v));
        return true;
      }
      const double factor = lead->second / piv->second.begin()->second;
      for (const auto& [k, c] : piv->second) {
        auto [it, inserted] = v.try_emplace(k, -factor * c);
        if (!inserted) it->second -= factor * c;
      }
      v.erase(piv->first);
    }
    return false;
  }

 private:
  double tol_;
  std::map<Key, Row> pivots_;
};

std::size_t numeric_rank(const std::vector<std::vector<double>>& cols, std::size_t dim, double tol) {
  if (cols.empty()) return 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index used = 0;
  for (const auto& c : cols) {
    double n = 0.0;
    for (double v : c) n += v * v;
    n = std::sqrt(n);
    if (n == 0.0 || !std::isfinite(n)) continue;
    for (std::size_t i = 0; i < dim; ++i) m(static_cast<Eigen::Index>(i), used) = c[i] / n;
    ++used;
  }
  if (used == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.leftCols(used));
  const auto& s = svd.singularValues();
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

struct Attempt {
  std::vector<double> params;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> history;  // residual after each iteration, starting point first
};

class Shooter {
 public:
  Shooter(const GalerkinSystem& sys, std::span<const double> q0, std::span<const double> target, double t_end,
          const SteerOptions& opt)
      : sys_(sys), q0_(q0.begin(), q0.end()), target_(target.begin(), target.end()), t_end_(t_end), opt_(opt) {}

  std::size_t parameter_count() const { return sys_.controlled().size() * opt_.segments; }

  std::vector<std::vector<double>> unpack(std::span<const double> p) const {
    std::vector<std::vector<double>> out(sys_.controlled().size());
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c].assign(p.begin() + static_cast<long>(c * opt_.segments),
                    p.begin() + static_cast<long>((c + 1) * opt_.segments));
    return out;
  }

  std::vector<double> endpoint(std::span<const double> p) const {
    return integrate(sys_, q0_, piecewise_controls(sys_, unpack(p), t_end_), t_end_, opt_.integrator).endpoint();
  }

  std::vector<double> residual(std::span<const double> p) const {
    auto x = endpoint(p);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= target_[i];
    return x;
  }

  Attempt solve(std::vector<double> p) const {
    const std::size_t m = p.size();
    const std::size_t n = target_.size();
    auto r = residual(p);
    double cost = norm2(r);
    Attempt a;
    a.history.push_back(cost);
    double mu = -1.0;
    for (int it = 0; it < opt_.max_iter && cost > opt_.tol; ++it) {
      Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      for (std::size_t k = 0; k < m; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
        auto plus = p, minus = p;
        plus[k] += h;
        minus[k] -= h;
        const auto fp = endpoint(plus);
        const auto fm = endpoint(minus);
        for (std::size_t i = 0; i < n; ++i)
          jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (fp[i] - fm[i]) / (2.0 * h);
      }
      ++a.iterations;
      const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(n));
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd jtr = jac.transpose() * rv;
      if (mu < 0.0) mu = 1e-3 * std::max(1e-12, jtj.diagonal().maxCoeff());
      bool accepted = false;
      for (int tries = 0; tries < 12; ++tries) {
        Eigen::MatrixXd lhs = jtj;
        lhs.diagonal().array() += mu;
        const Eigen::VectorXd delta = lhs.ldlt().solve(-jtr);
        std::vector<double> trial(m);
        for (std::size_t k = 0; k < m; ++k)
          trial[k] = std::clamp(p[k] + delta(static_cast<Eigen::Index>(k)), -opt_.amplitude_bound, opt_.amplitude_bound);
        std::vector<double> rt;
        try {
          rt = residual(trial);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::numerical) throw;
          mu *= 4.0;
          continue;
        }
        const double ct = norm2(rt);
        if (ct < cost) {
          p = std::move(trial);
          r = std::move(rt);
          cost = ct;
          mu = std::max(mu / 3.0, 1e-15);
          accepted = true;
          break;
        }
        mu *= 4.0;
      }
      if (!accepted) break;
      a.history.push_back(cost);
    }
    a.params = std::move(p);
    a.residual = cost;
    return a;
  }

 private:
  const GalerkinSystem& sys_;
  std::vector<double> q0_, target_;
  double t_end_;
  SteerOptions opt_;
};

}  // namespace

VectorField galerkin_drift_field(const GalerkinSystem& sys) {
  const std::size_t n = sys.dimension();
  VectorField f(n);
  const auto lam = sys.eigenvalues();
  for (std::size_t k = 0; k < n; ++k) {
    if (sys.nu() != 0.0) {
      Exponents e(n, 0);
      e[k] = 1;
      f.comps[k].add_term(e, sys.nu() * lam[k]);
    }
  }
  for (const auto& t : sys.triads()) {
    Exponents e(n, 0);
    e[t.i] += 1;
    e[t.j] += 1;
    f.comps[t.k].add_term(e, t.w);
  }
  return f;
}

std::vector<VectorField> galerkin_control_fields(const GalerkinSystem& sys) {
  std::vector<VectorField> out;
  for (std::size_t c : sys.controlled()) {
    std::vector<double> v(sys.dimension(), 0.0);
    v[sys.require_local(c)] = 1.0;
    out.push_back(VectorField::constant(v));
  }
  return out;
}

LieRankResult lie_rank_at(const std::vector<VectorField>& fields, std::span<const double> x, int depth,
                          const LieRankOptions& options) {
  if (depth < 1) throw Error(ErrorKind::invalid_argument, "Lie rank depth must be >= 1");
  if (fields.empty()) return {};
  const std::size_t n = fields.front().dimension();
  for (const auto& f : fields)
    if (f.dimension() != n) throw Error(ErrorKind::invalid_argument, "vector field dimension mismatch");
  if (x.size() != n) throw Error(ErrorKind::invalid_argument, "evaluation point dimension mismatch");

  Echelon ech(1e-12);
  std::vector<std::vector<double>> values;
  std::vector<VectorField> level;
  LieRankResult res;
  const std::size_t first = options.zero_time ? 1 : 0;
  for (std::size_t i = first; i < fields.size(); ++i)
    if (ech.add(fields[i])) {
      values.push_back(fields[i].evaluate<double>(x));
      level.push_back(fields[i]);
    }
  res.depth_reached = 1;
  res.rank = numeric_rank(values, n, options.rank_tol);
  for (int d = 2; d <= depth && res.rank < n && !level.empty(); ++d) {
    std::vector<VectorField> next;
    for (const auto& g : fields) {
      for (const auto& v : level) {
        auto b = poly_bracket(g, v);
        if (b.is_zero() || !ech.add(b)) continue;
        values.push_back(b.evaluate<double>(x));
        next.push_back(std::move(b));
        if (values.size() >= options.max_fields) break;
      }
      if (values.size() >= options.max_fields) break;
    }
    level = std::move(next);
    res.depth_reached = d;
    res.rank = numeric_rank(values, n, options.rank_tol);
    if (values.size() >= options.max_fields) break;
  }
  res.fields_considered = values.size();
  return res;
}

ControlSignal piecewise_controls(const GalerkinSystem& sys, const std::vector<std::vector<double>>& values,
                                 double t_end) {
  if (values.size() != sys.controlled().size())
    throw Error(ErrorKind::configuration, "need one control sequence per controlled mode");
  ControlSignal u;
  for (std::size_t c = 0; c < values.size(); ++c) {
    const std::size_t p = values[c].size();
    if (p == 0) throw Error(ErrorKind::configuration, "control sequence must have at least one segment");
    PiecewiseConstant pc;
    for (std::size_t s = 0; s <= p; ++s) pc.breaks.push_back(t_end * static_cast<double>(s) / static_cast<double>(p));
    pc.breaks.back() = t_end;
    pc.values = values[c];
    u.channels.push_back(ControlSignal::on_mode(sys.controlled()[c], std::move(pc)));
  }
  return u;
}

SteeringResult steer(const GalerkinSystem& sys, std::span<const double> q_start, std::span<const double> q_target,
                     double t_end, const SteerOptions& options) {
  if (!(t_end > 0.0)) throw Error(ErrorKind::invalid_argument, "steering horizon must be positive");
  if (sys.controlled().empty()) throw Error(ErrorKind::configuration, "steering needs at least one controlled mode");
  if (options.segments < 1) throw Error(ErrorKind::invalid_argument, "need at least one control segment");
  if (options.restarts < 1 || options.batch < 0) throw Error(ErrorKind::invalid_argument, "restarts must be >= 1");
  if (q_start.size() != sys.dimension() || q_target.size() != sys.dimension())
    throw Error(ErrorKind::invalid_argument, "state dimension mismatch");
  for (double v : q_target)
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "target must be finite");

  const Shooter shooter(sys, q_start, q_target, t_end, options);
  const std::size_t m = shooter.parameter_count();

  auto start_point = [&](int restart) {
    std::vector<double> p(m, 0.0);
    if (restart == 0) return p;
    std::mt19937_64 rng(splitmix(options.seed ^ splitmix(static_cast<std::uint64_t>(restart))));
    std::normal_distribution<double> nd(0.0, options.init_scale);
    for (auto& v : p) v = std::clamp(nd(rng), -options.amplitude_bound, options.amplitude_bound);
    return p;
  };

  const int batch = options.batch > 0 ? options.batch : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<Attempt> attempts;
  int used = 0;
  while (used < options.restarts) {
    const int count = std::min(batch, options.restarts - used);
    std::vector<std::future<Attempt>> jobs;
    for (int b = 0; b < count; ++b)
      jobs.push_back(std::async(std::launch::async, [&, r = used + b] { return shooter.solve(start_point(r)); }));
    bool converged = false;
    for (auto& j : jobs) {
      attempts.push_back(j.get());
      converged = converged || attempts.back().residual <= options.tol;
    }
    used += count;
    if (converged) break;
  }

  // First converged restart in index order, so the answer does not depend on
  // the batch size.
  auto best = std::find_if(attempts.begin(), attempts.end(),
                           [&](const Attempt& a) { return a.residual <= options.tol; });
  if (best == attempts.end())
    best = std::min_element(attempts.begin(), attempts.end(), [](const Attempt& a, const Attempt& b) {
      if (a.residual != b.residual) return a.residual < b.residual;
      return a.iterations < b.iterations;
    });

  SteeringResult out;
  out.controls = shooter.unpack(best->params);
  out.endpoint = shooter.endpoint(best->params);
  double s = 0.0;
  for (std::size_t i = 0; i < out.endpoint.size(); ++i) s += (out.endpoint[i] - q_target[i]) * (out.endpoint[i] - q_target[i]);
  out.residual = std::sqrt(s);
  out.iterations = best->iterations;
  out.history = best->history;
  out.converged = out.residual <= options.tol;
  out.restarts_used = out.converged ? static_cast<int>(best - attempts.begin()) + 1 : used;
  out.seed = options.seed;
  return out;
}

int winding_number(std::span<const Point2> poly, Point2 p) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    const double cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
    if (a[1] <= p[1]) {
      if (b[1] > p[1] && cross > 0) ++wn;
    } else if (b[1] <= p[1] && cross < 0) {
      --wn;
    }
  }
  return wn;
}

std::vector<std::vector<Point2>> sample_parameter_grid(const std::function<Point2(double, double)>& map, Point2 lo,
                                                       Point2 hi, int n) {
  if (n < 2) throw Error(ErrorKind::invalid_argument, "grid needs at least 2 points per side");
  std::vector<std::vector<Point2>> g(static_cast<std::size_t>(n), std::vector<Point2>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = lo[0] + (hi[0] - lo[0]) * i / (n - 1);
      const double b = lo[1] + (hi[1] - lo[1]) * j / (n - 1);
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = map(a, b);
    }
  return g;
}

CoveringResult covering_check(const std::vector<std::vector<Point2>>& grid, Point2 center, double radius,
                              int lattice) {
  const std::size_t n = grid.size();
  if (n < 32) throw Error(ErrorKind::invalid_argument, "covering check needs a grid of at least 32 x 32");
  for (const auto& row : grid)
    if (row.size() != n) throw Error(ErrorKind::invalid_argument, "covering grid must be square");
  if (!(radius > 0.0)) throw Error(ErrorKind::invalid_argument, "disc radius must be positive");
  if (lattice < 2) throw Error(ErrorKind::invalid_argument, "test lattice needs at least 2 points per side");

  CoveringResult res;
  // Collapsed images (a curve or a point) cannot cover anything.
  double mx = 0, my = 0;
  for (const auto& row : grid)
    for (const auto& p : row) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
        res.degenerate = true;
        return res;
      }
      mx += p[0];
      my += p[1];
    }
  const double cnt = static_cast<double>(n * n);
  mx /= cnt;
  my /= cnt;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& row : grid)
    for (const auto& p : row) {
      sxx += (p[0] - mx) * (p[0] - mx);
      sxy += (p[0] - mx) * (p[1] - my);
      syy += (p[1] - my) * (p[1] - my);
    }
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  const double l1 = tr / 2 + disc, l2 = tr / 2 - disc;
  if (!(l1 > 0.0) || l2 <= 1e-12 * l1) {
    res.degenerate = true;
    return res;
  }

  std::vector<Point2> boundary;
  for (std::size_t j = 0; j < n; ++j) boundary.push_back(grid[0][j]);
  for (std::size_t i = 1; i < n; ++i) boundary.push_back(grid[i][n - 1]);
  for (std::size_t j = n - 1; j-- > 0;) boundary.push_back(grid[n - 1][j]);
  for (std::size_t i = n - 1; i-- > 1;) boundary.push_back(grid[i][0]);

  for (int a = 0; a < lattice; ++a)
    for (int b = 0; b < lattice; ++b) {
      const double u = -1.0 + 2.0 * a / (lattice - 1);
      const double v = -1.0 + 2.0 * b / (lattice - 1);
      if (u * u + v * v > 1.0) continue;
      const Point2 p{center[0] + radius * u, center[1] + radius * v};
      ++res.test_points;
      if (winding_number(boundary, p) == 0) ++res.uncovered;
    }
  res.covered = res.test_points > 0 && res.uncovered == 0;
  return res;
}

}  // namespace nsctl
