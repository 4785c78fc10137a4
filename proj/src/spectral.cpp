#include "nsctl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nsctl {
namespace {

using Vec2 = std::array<int, 2>;

Vec2 add(Vec2 a, Vec2 b) { return {a[0] + b[0], a[1] + b[1]}; }
Vec2 sub(Vec2 a, Vec2 b) { return {a[0] - b[0], a[1] - b[1]}; }

// Accumulates c * basis(m, parity) with m folded onto the half-lattice:
// cos(-m.x) = cos(m.x), sin(-m.x) = -sin(m.x); m = 0 contributes nothing
// (the constant mode is excluded from the vorticity basis).
void accumulate_torus(std::vector<std::pair<ModeId, long long>>& out, Vec2 m, Parity p,
                      long long c) {
  if (c == 0 || (m[0] == 0 && m[1] == 0)) return;
  if (!on_half_lattice(m[0], m[1])) {
    m = {-m[0], -m[1]};
    if (p == Parity::sin) c = -c;
  }
  const ModeId id = ModeId::torus(m[0], m[1], p);
  for (auto& [mode, coeff] : out)
    if (mode == id) {
      coeff += c;
      return;
    }
  out.emplace_back(id, c);
}

void check_torus_vector(Vec2 k) {
  if (k[0] == 0 && k[1] == 0)
    throw Error(ErrorKind::invalid_mode, "torus mode with zero lattice vector");
}

}  // namespace

const char* to_string(Domain d) {
  switch (d) {
    case Domain::torus: return "torus";
    case Domain::rectangle: return "rectangle";
    case Domain::sphere: return "sphere";
  }
  return "?";
}

Domain domain_from_string(const std::string& s) {
  if (s == "torus") return Domain::torus;
  if (s == "rectangle") return Domain::rectangle;
  if (s == "sphere") return Domain::sphere;
  throw Error(ErrorKind::validation, "unknown domain '" + s + "'");
}

bool on_half_lattice(int k1, int k2) { return k1 > 0 || (k1 == 0 && k2 > 0); }

int wedge(const std::array<int, 2>& a, const std::array<int, 2>& b) {
  return a[0] * b[1] - a[1] * b[0];
}

ModeId ModeId::torus(int k1, int k2, Parity p) {
  if (!on_half_lattice(k1, k2))
    throw Error(ErrorKind::invalid_mode, "torus mode must lie on the half-lattice and be nonzero");
  return ModeId{Domain::torus, {k1, k2}, p};
}

ModeId ModeId::rectangle(int k1, int k2) {
  if (k1 < 1 || k2 < 1)
    throw Error(ErrorKind::invalid_mode, "rectangle mode indices must be positive");
  return ModeId{Domain::rectangle, {k1, k2}, Parity::cos};
}

ModeId ModeId::sphere(int degree, int order) {
  if (degree < 1 || order < 0 || order > 2 * degree)
    throw Error(ErrorKind::invalid_mode, "sphere mode needs degree >= 1 and order in [0, 2s]");
  return ModeId{Domain::sphere, {degree, order}, Parity::cos};
}

std::string ModeId::label() const {
  std::ostringstream os;
  switch (domain) {
    case Domain::torus: os << (parity == Parity::cos ? "c" : "s"); break;
    case Domain::rectangle: os << "r"; break;
    case Domain::sphere: os << "y"; break;
  }
  os << "_" << k[0] << "_" << k[1];
  return os.str();
}

ModeId ModeId::parse(const std::string& label) {
  const auto fail = [&] { return Error(ErrorKind::invalid_mode, "bad mode label '" + label + "'"); };
  if (label.size() < 5 || label[1] != '_') throw fail();
  const auto sep = label.find('_', 2);
  if (sep == std::string::npos) throw fail();
  int a = 0, b = 0;
  try {
    std::size_t used = 0;
    const std::string first = label.substr(2, sep - 2);
    const std::string second = label.substr(sep + 1);
    a = std::stoi(first, &used);
    if (used != first.size()) throw fail();
    b = std::stoi(second, &used);
    if (used != second.size()) throw fail();
  } catch (const std::logic_error&) {
    throw fail();
  }
  switch (label[0]) {
    case 'c': return torus(a, b, Parity::cos);
    case 's': return torus(a, b, Parity::sin);
    case 'r': return rectangle(a, b);
    case 'y': return sphere(a, b);
    default: throw fail();
  }
}

double eigenvalue(const ModeId& mode, const Geometry& g) {
  switch (mode.domain) {
    case Domain::torus:
      return -static_cast<double>(mode.k[0] * mode.k[0] + mode.k[1] * mode.k[1]);
    case Domain::rectangle: {
      const double x = mode.k[0] / g.a;
      const double y = mode.k[1] / g.b;
      return -std::numbers::pi * std::numbers::pi * (x * x + y * y);
    }
    case Domain::sphere:
      return -static_cast<double>(mode.degree() * (mode.degree() + 1));
  }
  return 0.0;
}

Expansion torus_structure(Vec2 k, Parity pk, Vec2 l, Parity pl) {
  check_torus_vector(k);
  check_torus_vector(l);
  const long long w = wedge(k, l);
  // Work in units of w/2 to keep the product-to-sum split exact.
  std::vector<std::pair<ModeId, long long>> acc;
  const Vec2 kp = add(k, l);
  const Vec2 km = sub(k, l);
  if (w != 0) {
    if (pk == Parity::cos && pl == Parity::cos) {
      // w sin(k.x) sin(l.x)
      accumulate_torus(acc, km, Parity::cos, w);
      accumulate_torus(acc, kp, Parity::cos, -w);
    } else if (pk == Parity::sin && pl == Parity::sin) {
      // w cos(k.x) cos(l.x)
      accumulate_torus(acc, km, Parity::cos, w);
      accumulate_torus(acc, kp, Parity::cos, w);
    } else if (pk == Parity::cos && pl == Parity::sin) {
      // -w sin(k.x) cos(l.x)
      accumulate_torus(acc, kp, Parity::sin, -w);
      accumulate_torus(acc, km, Parity::sin, -w);
    } else {
      // -w cos(k.x) sin(l.x)
      accumulate_torus(acc, kp, Parity::sin, -w);
      accumulate_torus(acc, km, Parity::sin, w);
    }
  }
  Expansion out;
  for (const auto& [mode, c] : acc)
    if (c != 0) out.emplace_back(mode, 0.5 * static_cast<double>(c));
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

Expansion rect_structure(Vec2 k, Vec2 l, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw Error(ErrorKind::invalid_geometry, "rectangle side lengths must be positive");
  if (k[0] < 1 || k[1] < 1 || l[0] < 1 || l[1] < 1)
    throw Error(ErrorKind::invalid_mode, "rectangle mode indices must be positive");
  const long long k1 = k[0], k2 = k[1], l1 = l[0], l2 = l[1];
  // (pi^2 / 4ab) [ k1 l2 (S+ - S-)(T+ + T-) - k2 l1 (S+ + S-)(T+ - T-) ]
  const struct {
    long long m1, m2, c;
  } raw[4] = {
      {k1 + l1, k2 + l2, k1 * l2 - k2 * l1},
      {k1 + l1, k2 - l2, k1 * l2 + k2 * l1},
      {k1 - l1, k2 + l2, -k1 * l2 - k2 * l1},
      {k1 - l1, k2 - l2, -k1 * l2 + k2 * l1},
  };
  std::vector<std::pair<Vec2, long long>> acc;
  for (const auto& t : raw) {
    if (t.m1 == 0 || t.m2 == 0 || t.c == 0) continue;
    const long long sign = (t.m1 < 0 ? -1 : 1) * (t.m2 < 0 ? -1 : 1);
    const Vec2 m{static_cast<int>(std::llabs(t.m1)), static_cast<int>(std::llabs(t.m2))};
    auto it = std::find_if(acc.begin(), acc.end(), [&](const auto& e) { return e.first == m; });
    if (it == acc.end()) acc.emplace_back(m, sign * t.c);
    else it->second += sign * t.c;
  }
  const double scale = std::numbers::pi * std::numbers::pi / (4.0 * a * b);
  Expansion out;
  for (const auto& [m, c] : acc)
    if (c != 0) out.emplace_back(ModeId::rectangle(m[0], m[1]), scale * static_cast<double>(c));
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

StructureTable::StructureTable(Domain d, TableParams p, std::vector<ModeId> modes)
    : domain_(d), params_(p), modes_(std::move(modes)) {
  std::sort(modes_.begin(), modes_.end());
  const std::size_t n = modes_.size();
  lambda_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    lambda_.push_back(eigenvalue(modes_[i], params_.geometry));
    index_.emplace(modes_[i].label(), i);
  }
  entries_.assign(n * n, {});
  truncated_.assign(n * n, 0.0);
}

void StructureTable::set_entry(std::size_t i, std::size_t j, std::vector<Term> terms,
                               double truncated) {
  const std::size_t n = modes_.size();
  std::vector<Term> neg = terms;
  for (auto& t : neg) t.coeff = -t.coeff;
  entries_[i * n + j] = std::move(terms);
  entries_[j * n + i] = std::move(neg);
  truncated_[i * n + j] = truncated;
  truncated_[j * n + i] = truncated;
}

std::optional<std::size_t> StructureTable::index_of(const ModeId& m) const {
  auto it = index_.find(m.label());
  if (it == index_.end() || modes_[it->second].domain != m.domain) return std::nullopt;
  return it->second;
}

std::size_t StructureTable::require_index(const ModeId& m) const {
  if (auto i = index_of(m)) return *i;
  throw Error(ErrorKind::truncation, "mode " + m.label() + " is not in the structure table");
}

StructureTable StructureTable::torus(int box) {
  if (box < 1) throw Error(ErrorKind::invalid_argument, "torus box must be >= 1");
  std::vector<ModeId> modes;
  for (int k1 = 0; k1 <= box; ++k1)
    for (int k2 = -box; k2 <= box; ++k2)
      if (on_half_lattice(k1, k2))
        for (Parity p : {Parity::cos, Parity::sin}) modes.push_back(ModeId::torus(k1, k2, p));
  TableParams params;
  params.box = box;
  StructureTable t(Domain::torus, params, std::move(modes));
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = t.modes_[i];
      const auto& b = t.modes_[j];
      std::vector<Term> terms;
      double dropped = 0.0;
      for (const auto& [m, c] : torus_structure(a.k, a.parity, b.k, b.parity)) {
        if (auto idx = t.index_of(m)) terms.push_back({*idx, c});
        else dropped += std::abs(c);
      }
      t.set_entry(i, j, std::move(terms), dropped);
    }
  return t;
}

StructureTable StructureTable::rectangle(int box, Geometry g) {
  if (box < 1) throw Error(ErrorKind::invalid_argument, "rectangle box must be >= 1");
  if (!(g.a > 0.0) || !(g.b > 0.0))
    throw Error(ErrorKind::invalid_geometry, "rectangle side lengths must be positive");
  std::vector<ModeId> modes;
  for (int k1 = 1; k1 <= box; ++k1)
    for (int k2 = 1; k2 <= box; ++k2) modes.push_back(ModeId::rectangle(k1, k2));
  TableParams params;
  params.box = box;
  params.geometry = g;
  StructureTable t(Domain::rectangle, params, std::move(modes));
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      std::vector<Term> terms;
      double dropped = 0.0;
      for (const auto& [m, c] : rect_structure(t.modes_[i].k, t.modes_[j].k, g.a, g.b)) {
        if (auto idx = t.index_of(m)) terms.push_back({*idx, c});
        else dropped += std::abs(c);
      }
      t.set_entry(i, j, std::move(terms), dropped);
    }
  return t;
}

StructureTable StructureTable::sphere(int max_degree) {
  if (max_degree < 1) throw Error(ErrorKind::invalid_argument, "sphere degree cutoff must be >= 1");
  std::vector<ModeId> modes;
  for (int s = 1; s <= max_degree; ++s)
    for (int o = 0; o <= 2 * s; ++o) modes.push_back(ModeId::sphere(s, o));
  TableParams params;
  params.max_degree = max_degree;
  StructureTable t(Domain::sphere, params, std::move(modes));
  const std::size_t n = t.size();
  t.sphere_polys_.reserve(n);
  for (const auto& m : t.modes_) t.sphere_polys_.push_back(harmonic_basis(m.degree(), m.order()).poly());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dropped = 0.0;
      const auto coords = sphere_coordinates(sphere_poisson(t.sphere_polys_[i], t.sphere_polys_[j]), t,
                                             &dropped);
      std::vector<Term> terms;
      for (std::size_t k = 0; k < n; ++k)
        if (coords[k] != 0.0) terms.push_back({k, coords[k]});
      t.set_entry(i, j, std::move(terms), dropped);
    }
  return t;
}

const SpherePoly& StructureTable::sphere_polynomial(std::size_t i) const {
  if (domain_ != Domain::sphere)
    throw Error(ErrorKind::invalid_argument, "polynomial representatives exist only on the sphere");
  return sphere_polys_.at(i);
}

std::vector<double> sphere_coordinates(const SpherePoly& p, const StructureTable& table,
                                       double* dropped) {
  if (table.domain() != Domain::sphere)
    throw Error(ErrorKind::invalid_argument, "sphere coordinates need a sphere table");
  std::vector<double> out(table.size(), 0.0);
  double lost = 0.0;
  for (const auto& [degree, h] : harmonic_decompose(p)) {
    if (degree == 0) {
      lost += std::abs(to_double(h.coefficient({0, 0, 0})));
      continue;
    }
    const auto coords = harmonic_coordinates(HarmonicPoly(h, degree));
    for (int o = 0; o <= 2 * degree; ++o) {
      const double c = to_double(coords[static_cast<std::size_t>(o)]);
      if (c == 0.0) continue;
      if (auto idx = table.index_of(ModeId::sphere(degree, o))) out[*idx] += c;
      else lost += std::abs(c);
    }
  }
  if (dropped) *dropped = lost;
  return out;
}

BracketResult bracket_B(std::span<const double> f1, std::span<const double> f2,
                        const StructureTable& table) {
  const std::size_t n = table.size();
  if (f1.size() != n || f2.size() != n)
    throw Error(ErrorKind::invalid_argument, "coefficient vector length does not match table");
  BracketResult r;
  r.value.assign(n, 0.0);
  const auto lambda = table.eigenvalues();
  for (std::size_t i = 0; i < n; ++i) {
    if (f1[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (f2[j] == 0.0 || i == j) continue;
      const double w = f1[i] * f2[j] * (1.0 / lambda[i] - 1.0 / lambda[j]);
      if (w == 0.0) continue;
      for (const auto& t : table.bracket(i, j)) r.value[t.mode] += w * t.coeff;
      r.truncated += std::abs(w) * table.truncated_weight(i, j);
    }
  }
  return r;
}

nlohmann::json StructureTable::to_json() const {
  using nlohmann::json;
  json doc;
  doc["domain"] = to_string(domain_);
  json params = json::object();
  if (domain_ == Domain::sphere) params["max_degree"] = params_.max_degree;
  else params["box"] = params_.box;
  if (domain_ == Domain::rectangle) {
    params["a"] = params_.geometry.a;
    params["b"] = params_.geometry.b;
  }
  doc["params"] = params;
  json modes = json::array();
  for (const auto& m : modes_) modes.push_back(m.label());
  doc["modes"] = modes;
  doc["lambda"] = lambda_;
  json entries = json::array();
  const std::size_t n = modes_.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto& e = entries_[i * n + j];
      if (e.empty() && truncated_[i * n + j] == 0.0) continue;
      json terms = json::array();
      for (const auto& t : e) terms.push_back({{"k", t.mode}, {"c", t.coeff}});
      json entry{{"i", i}, {"j", j}, {"terms", terms}};
      if (truncated_[i * n + j] != 0.0) entry["truncated"] = truncated_[i * n + j];
      entries.push_back(std::move(entry));
    }
  doc["entries"] = entries;
  return doc;
}

StructureTable StructureTable::from_json(const nlohmann::json& doc) {
  try {
    const Domain d = domain_from_string(doc.at("domain").get<std::string>());
    TableParams params;
    const auto& p = doc.at("params");
    if (d == Domain::sphere) params.max_degree = p.at("max_degree").get<int>();
    else params.box = p.at("box").get<int>();
    if (d == Domain::rectangle) params.geometry = {p.at("a").get<double>(), p.at("b").get<double>()};
    std::vector<ModeId> modes;
    for (const auto& label : doc.at("modes")) {
      modes.push_back(ModeId::parse(label.get<std::string>()));
      if (modes.back().domain != d) throw Error(ErrorKind::validation, "mode domain mismatch");
    }
    const std::vector<ModeId> listed = modes;
    StructureTable t(d, params, std::move(modes));
    if (listed != t.modes_)
      throw Error(ErrorKind::validation, "table modes must be listed in sorted order");
    const auto lambda = doc.at("lambda").get<std::vector<double>>();
    if (lambda.size() != t.size()) throw Error(ErrorKind::validation, "lambda length mismatch");
    t.lambda_ = lambda;
    const std::size_t n = t.size();
    for (const auto& e : doc.at("entries")) {
      const auto i = e.at("i").get<std::size_t>();
      const auto j = e.at("j").get<std::size_t>();
      if (i >= n || j >= n) throw Error(ErrorKind::validation, "entry index out of range");
      std::vector<Term> terms;
      for (const auto& term : e.at("terms")) {
        const auto k = term.at("k").get<std::size_t>();
        if (k >= n) throw Error(ErrorKind::validation, "term mode out of range");
        terms.push_back({k, term.at("c").get<double>()});
      }
      t.entries_[i * n + j] = std::move(terms);
      t.truncated_[i * n + j] = e.value("truncated", 0.0);
    }
    if (d == Domain::sphere)
      for (const auto& m : t.modes_) t.sphere_polys_.push_back(harmonic_basis(m.degree(), m.order()).poly());
    return t;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::validation, std::string("malformed table document: ") + ex.what());
  }
}

}  // namespace nsctl
