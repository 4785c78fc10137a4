#include "nsctl/saturation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>

#include <Eigen/Dense>

namespace nsctl {
namespace {

long long norm2(const LatticeVec& v) {
  return static_cast<long long>(v[0]) * v[0] + static_cast<long long>(v[1]) * v[1];
}

bool combinable(const LatticeVec& m, const LatticeVec& n) {
  return norm2(m) != norm2(n) && wedge(m, n) != 0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

const char* to_string(ClosureVerdict v) {
  switch (v) {
    case ClosureVerdict::filled: return "filled";
    case ClosureVerdict::not_filled: return "not_filled";
    case ClosureVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(SteadyFilter f) {
  return f == SteadyFilter::conservative ? "conservative" : "permissive";
}

const char* to_string(ClosureStop s) {
  switch (s) {
    case ClosureStop::fixpoint: return "fixpoint";
    case ClosureStop::step_cap: return "step_cap";
    case ClosureStop::dim_cap: return "dim_cap";
  }
  return "?";
}

LatticeSet lattice_closure_step(const LatticeSet& k) {
  LatticeSet out = k;
  out.erase({0, 0});
  for (const auto& m : k)
    for (const auto& n : k)
      if (combinable(m, n)) out.insert({m[0] + n[0], m[1] + n[1]});
  return out;
}

bool is_symmetric(const LatticeSet& k) {
  return std::all_of(k.begin(), k.end(), [&](const LatticeVec& v) { return k.count({-v[0], -v[1]}) > 0; });
}

LatticeClosure lattice_saturation_closure(const LatticeSet& k, int box, int max_steps) {
  if (box < 1) throw Error(ErrorKind::invalid_argument, "box radius must be >= 1");
  if (max_steps < 0) throw Error(ErrorKind::invalid_argument, "step cap must be nonnegative");
  for (const auto& v : k) {
    if (v[0] == 0 && v[1] == 0) throw Error(ErrorKind::invalid_argument, "lattice set contains the origin");
    if (std::abs(v[0]) > box || std::abs(v[1]) > box)
      throw Error(ErrorKind::invalid_argument, "box radius is smaller than the input set");
  }
  const int side = 2 * box + 1;
  std::vector<char> member(static_cast<std::size_t>(side * side), 0);
  auto slot = [&](const LatticeVec& v) { return static_cast<std::size_t>((v[0] + box) * side + (v[1] + box)); };

  LatticeClosure out;
  out.set = k;
  std::vector<LatticeVec> all(k.begin(), k.end());
  for (const auto& v : all) member[slot(v)] = 1;
  std::vector<LatticeVec> fresh = all;

  // Only pairs with at least one member from the previous step can produce
  // anything new.
  for (int j = 1; j <= max_steps; ++j) {
    LatticeSet added;
    for (const auto& m : fresh)
      for (const auto& n : all) {
        if (!combinable(m, n)) continue;
        const LatticeVec s{m[0] + n[0], m[1] + n[1]};
        if (std::abs(s[0]) > box || std::abs(s[1]) > box || member[slot(s)]) continue;
        added.insert(s);
      }
    if (added.empty()) {
      out.fixpoint = true;
      break;
    }
    fresh.assign(added.begin(), added.end());
    for (const auto& v : fresh) {
      member[slot(v)] = 1;
      all.push_back(v);
      out.set.insert(v);
    }
    out.steps.push_back({j, fresh, out.set.size()});
  }
  if (!out.fixpoint) {
    // One more probe: the cap may coincide with the fixpoint.
    out.fixpoint = true;
    for (const auto& m : fresh) {
      for (const auto& n : all) {
        if (!combinable(m, n)) continue;
        const LatticeVec s{m[0] + n[0], m[1] + n[1]};
        if (std::abs(s[0]) <= box && std::abs(s[1]) <= box && !member[slot(s)]) {
          out.fixpoint = false;
          break;
        }
      }
      if (!out.fixpoint) break;
    }
  }
  const std::size_t full = static_cast<std::size_t>(side * side - 1);
  if (!out.fixpoint) out.verdict = ClosureVerdict::inconclusive;
  else out.verdict = out.set.size() == full ? ClosureVerdict::filled : ClosureVerdict::not_filled;
  return out;
}

bool is_saturating_gcd(const LatticeSet& k) {
  long long g = 0;
  bool distinct_lengths = false;
  for (const auto& m : k)
    for (const auto& n : k) {
      const long long w = wedge(m, n);
      if (w == 0) continue;
      g = std::gcd(g, std::llabs(w));
      if (norm2(m) != norm2(n)) distinct_lengths = true;
    }
  return g == 1 && distinct_lengths;
}

SubspaceBasis::SubspaceBasis(std::size_t ambient, double rel_tol) : ambient_(ambient), tol_(rel_tol) {
  if (!(rel_tol > 0.0)) throw Error(ErrorKind::invalid_argument, "rank tolerance must be positive");
}

bool SubspaceBasis::add(std::span<const double> v) {
  if (v.size() != ambient_) throw Error(ErrorKind::invalid_argument, "vector length does not match subspace");
  const double n0 = norm(v);
  if (n0 == 0.0 || !std::isfinite(n0)) return false;
  if (q_.size() == ambient_) return false;
  std::vector<double> r(v.begin(), v.end());
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : q_) {
      const double c = dot(q, r);
      for (std::size_t i = 0; i < ambient_; ++i) r[i] -= c * q[i];
    }
  const double nr = norm(r);
  if (nr <= tol_ * n0) return false;
  for (auto& x : r) x /= nr;
  q_.push_back(std::move(r));
  return true;
}

std::vector<double> SubspaceBasis::project(std::span<const double> v) const {
  if (v.size() != ambient_) throw Error(ErrorKind::invalid_argument, "vector length does not match subspace");
  std::vector<double> p(ambient_, 0.0);
  for (const auto& q : q_) {
    const double c = dot(q, v);
    for (std::size_t i = 0; i < ambient_; ++i) p[i] += c * q[i];
  }
  return p;
}

double SubspaceBasis::distance(std::span<const double> v) const {
  const auto p = project(v);
  double s = 0.0;
  for (std::size_t i = 0; i < ambient_; ++i) s += (v[i] - p[i]) * (v[i] - p[i]);
  return std::sqrt(s);
}

bool SubspaceBasis::contains_mode(std::size_t i, double tol) const {
  // Formed explicitly; 1 - sum_q q_i^2 loses everything below sqrt(eps).
  std::vector<double> r(ambient_, 0.0);
  r[i] = 1.0;
  for (const auto& q : q_) {
    const double c = q[i];
    if (c == 0.0) continue;
    for (std::size_t k = 0; k < ambient_; ++k) r[k] -= c * q[k];
  }
  return norm(r) <= tol;
}

std::vector<std::size_t> contained_modes(const SubspaceBasis& basis, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < basis.ambient(); ++i)
    if (basis.contains_mode(i, tol)) out.push_back(i);
  return out;
}

std::vector<std::vector<double>> steady_part(const SubspaceBasis& d, const StructureTable& table,
                                             SteadyFilter filter) {
  const std::size_t n = table.size();
  const double member_tol = 1e3 * d.tolerance();
  std::vector<std::vector<double>> out;
  if (filter == SteadyFilter::conservative) {
    for (std::size_t i : contained_modes(d, member_tol)) {
      std::vector<double> e(n, 0.0);
      e[i] = 1.0;
      out.push_back(std::move(e));
    }
    return out;
  }

  SubspaceBasis s(n, d.tolerance());
  const std::size_t dim = d.dimension();
  if (dim == 0) return {};
  Eigen::MatrixXd q(n, dim);
  for (std::size_t c = 0; c < dim; ++c)
    for (std::size_t r = 0; r < n; ++r) q(r, c) = d.orthonormal()[c][r];

  // D intersected with each eigenspace.
  const auto lambda = table.eigenvalues();
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (auto& [l, idx] : groups)
      if (std::abs(l - lambda[i]) <= 1e-12 * std::abs(l)) {
        idx.push_back(i);
        placed = true;
        break;
      }
    if (!placed) groups[lambda[i]] = {i};
  }
  for (const auto& [l, idx] : groups) {
    std::vector<char> inside(n, 0);
    for (std::size_t i : idx) inside[i] = 1;
    Eigen::MatrixXd outside(static_cast<Eigen::Index>(n - idx.size()), static_cast<Eigen::Index>(dim));
    Eigen::Index row = 0;
    for (std::size_t r = 0; r < n; ++r)
      if (!inside[r]) outside.row(row++) = q.row(static_cast<Eigen::Index>(r));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(outside, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(dim); ++c) {
      const double sigma = c < sv.size() ? sv(c) : 0.0;
      if (sigma > member_tol) continue;
      const Eigen::VectorXd v = q * svd.matrixV().col(c);
      std::vector<double> f(n, 0.0);
      for (std::size_t i : idx) f[i] = v(static_cast<Eigen::Index>(i));
      s.add(f);
    }
  }

  // Working-basis vectors that are steady on their own.
  double cscale = 0.0, linv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linv = std::max(linv, 1.0 / std::abs(lambda[i]));
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& t : table.bracket(i, j)) cscale = std::max(cscale, std::abs(t.coeff));
  }
  for (const auto& f : d.orthonormal()) {
    const auto b = bracket_B(f, f, table);
    if (norm(b.value) <= member_tol * cscale * linv * static_cast<double>(n)) s.add(f);
  }
  return s.orthonormal();
}

SpanClosure span_closure(const std::vector<std::vector<double>>& generators, const StructureTable& table,
                         const ClosureOptions& options, const StepObserver& observer) {
  const std::size_t n = table.size();
  if (options.max_steps < 0) throw Error(ErrorKind::invalid_argument, "step cap must be nonnegative");
  SpanClosure out{SubspaceBasis(n, options.rank_tol), {}, ClosureStop::fixpoint};
  for (const auto& g : generators) out.basis.add(g);
  const std::size_t cap = options.dim_cap == 0 ? n : std::min(options.dim_cap, n);
  out.steps.push_back({0, out.basis.dimension(), out.basis.dimension(), 0, 0.0});
  if (observer) observer(out.steps.back(), out.basis);

  for (int j = 1;; ++j) {
    if (out.basis.dimension() >= cap) {
      out.stop = out.basis.dimension() >= n ? ClosureStop::fixpoint : ClosureStop::dim_cap;
      break;
    }
    if (j > options.max_steps) {
      out.stop = ClosureStop::step_cap;
      break;
    }
    const auto steady = steady_part(out.basis, table, options.filter);
    // Snapshot D^j: new vectors join D^{j+1} only.
    const auto current = out.basis.orthonormal();
    const std::size_t before = out.basis.dimension();
    double truncated = 0.0;
    for (const auto& s : steady) {
      for (const auto& d : current) {
        const auto b = bracket_B(s, d, table);
        truncated += b.truncated;
        out.basis.add(b.value);
      }
    }
    const std::size_t added = out.basis.dimension() - before;
    out.steps.push_back({j, added, out.basis.dimension(), steady.size(), truncated});
    if (observer) observer(out.steps.back(), out.basis);
    if (added == 0) {
      out.stop = ClosureStop::fixpoint;
      break;
    }
  }
  return out;
}

ProjectedRank projected_rank(const SubspaceBasis& basis, std::span<const std::size_t> l, double rank_tol) {
  if (l.empty()) throw Error(ErrorKind::invalid_argument, "projected rank needs a nonempty mode list");
  for (std::size_t i : l)
    if (i >= basis.ambient()) throw Error(ErrorKind::invalid_argument, "projected rank mode index out of range");
  ProjectedRank out;
  const std::size_t dim = basis.dimension();
  if (dim == 0) return out;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(l.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < l.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = basis.orthonormal()[c][l[r]];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol) ++out.rank;
  out.full_rank = out.rank == l.size();
  return out;
}

}  // namespace nsctl
