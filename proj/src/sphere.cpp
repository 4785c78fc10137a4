#include "nsctl/sphere.hpp"

#include <sstream>

namespace nsctl {
namespace {

constexpr std::size_t kVars = 3;

Exponents mono(int a, int b, int c) { return Exponents{a, b, c}; }

// Laplacian in (x1, x2) only.
SpherePoly planar_laplacian(const SpherePoly& p) {
  return p.derivative(0).derivative(0) + p.derivative(1).derivative(1);
}

// Harmonic projection of a homogeneous polynomial of degree d in R^3:
//   H(p) = sum_j (-1)^j r^{2j} Lap^j p / (4^j j! prod_{i=1..j} (d + 1/2 - i)).
SpherePoly harmonic_projection(const SpherePoly& p, int d) {
  SpherePoly result(kVars);
  SpherePoly term = p;
  SpherePoly rpow = sphere_constant(Rational(1));
  Rational coef(1);
  const SpherePoly r2 = radius_squared();
  for (int j = 0; !term.is_zero(); ++j) {
    if (j > 0) {
      coef *= Rational(-1);
      coef /= Rational(4 * j);
      coef /= Rational(2 * d + 1 - 2 * j, 2);
    }
    result += (rpow * term) * coef;
    term = euclidean_laplacian(term);
    rpow = rpow * r2;
  }
  return result;
}

// Exact division of a homogeneous polynomial by r^2, eliminating the highest
// power of x3 first.
SpherePoly divide_by_radius_squared(SpherePoly p) {
  SpherePoly quotient(kVars);
  const SpherePoly r2 = radius_squared();
  while (!p.is_zero()) {
    auto lead = p.terms().begin();
    for (auto it = p.terms().begin(); it != p.terms().end(); ++it)
      if (it->first[2] > lead->first[2] ||
          (it->first[2] == lead->first[2] && it->first > lead->first))
        lead = it;
    const Exponents e = lead->first;
    const Rational c = lead->second;
    if (e[2] < 2)
      throw Error(ErrorKind::numerical, "remainder not divisible by r^2 in harmonic split");
    const Exponents q = mono(e[0], e[1], e[2] - 2);
    quotient.add_term(q, c);
    p -= r2.shifted(q, c);
  }
  return quotient;
}

}  // namespace

SpherePoly sphere_variable(int index) {
  return SpherePoly::variable(kVars, static_cast<std::size_t>(index));
}

SpherePoly sphere_constant(const Rational& c) { return SpherePoly::constant(kVars, c); }

SpherePoly radius_squared() {
  SpherePoly r2(kVars);
  r2.add_term(mono(2, 0, 0), Rational(1));
  r2.add_term(mono(0, 2, 0), Rational(1));
  r2.add_term(mono(0, 0, 2), Rational(1));
  return r2;
}

SpherePoly euclidean_laplacian(const SpherePoly& p) {
  return planar_laplacian(p) + p.derivative(2).derivative(2);
}

bool is_harmonic(const SpherePoly& p) { return euclidean_laplacian(p).is_zero(); }

SpherePoly sphere_poisson(const SpherePoly& p, const SpherePoly& q) {
  const std::array<SpherePoly, 3> gp{p.derivative(0), p.derivative(1), p.derivative(2)};
  const std::array<SpherePoly, 3> gq{q.derivative(0), q.derivative(1), q.derivative(2)};
  SpherePoly out(kVars);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    out += sphere_variable(i) * (gp[j] * gq[k] - gp[k] * gq[j]);
  }
  return out;
}

SpherePoly reduce_on_sphere(const SpherePoly& p) {
  SpherePoly out(kVars);
  SpherePoly pending = p;
  while (!pending.is_zero()) {
    SpherePoly next(kVars);
    for (const auto& [e, c] : pending.terms()) {
      if (e[2] < 2) {
        out.add_term(e, c);
        continue;
      }
      // x3^2 -> 1 - x1^2 - x2^2
      next.add_term(mono(e[0], e[1], e[2] - 2), c);
      next.add_term(mono(e[0] + 2, e[1], e[2] - 2), -c);
      next.add_term(mono(e[0], e[1] + 2, e[2] - 2), -c);
    }
    pending = std::move(next);
  }
  return out;
}

std::map<int, SpherePoly> harmonic_decompose(const SpherePoly& p) {
  std::map<int, SpherePoly> out;
  const int top = p.degree();
  for (int d = top; d >= 0; --d) {
    SpherePoly rest = p.homogeneous_part(d);
    int degree = d;
    while (!rest.is_zero()) {
      SpherePoly h = harmonic_projection(rest, degree);
      SpherePoly remainder = rest - h;
      if (!h.is_zero()) {
        auto [it, inserted] = out.try_emplace(degree, h);
        if (!inserted) it->second += h;
      }
      if (remainder.is_zero()) break;
      rest = divide_by_radius_squared(std::move(remainder));
      degree -= 2;
    }
  }
  std::erase_if(out, [](const auto& kv) { return kv.second.is_zero(); });
  return out;
}

HarmonicPoly::HarmonicPoly(SpherePoly poly, int degree)
    : poly_(std::move(poly)), degree_(degree) {
  if (poly_.nvars() != kVars)
    throw Error(ErrorKind::invalid_argument, "harmonic polynomial needs three variables");
  if (!poly_.is_homogeneous() || (!poly_.is_zero() && poly_.degree() != degree_))
    throw Error(ErrorKind::invalid_argument, "polynomial is not homogeneous of the stated degree");
  if (!is_harmonic(poly_))
    throw Error(ErrorKind::invalid_argument, "polynomial is not harmonic");
}

std::array<int, 3> harmonic_anchor(int degree, int order) {
  if (degree < 0 || order < 0 || order > 2 * degree)
    throw Error(ErrorKind::invalid_mode, "sphere order index out of range");
  if (order <= degree) return {degree - order, order, 0};
  const int i = order - degree - 1;
  return {degree - 1 - i, i, 1};
}

int harmonic_order_of_anchor(const std::array<int, 3>& anchor) {
  const int degree = anchor[0] + anchor[1] + anchor[2];
  if (anchor[2] == 0) return anchor[1];
  if (anchor[2] == 1) return degree + 1 + anchor[1];
  throw Error(ErrorKind::invalid_mode, "anchor monomial has x3-degree above one");
}

HarmonicPoly harmonic_basis(int degree, int order) {
  const auto a = harmonic_anchor(degree, order);
  // h = sum_j x3^j g_j with g_{j+2} = -Lap12 g_j / ((j+2)(j+1)).
  SpherePoly g = SpherePoly::monomial(mono(a[0], a[1], a[2]), Rational(1));
  SpherePoly h = g;
  for (int j = a[2];; j += 2) {
    SpherePoly lap = planar_laplacian(g);
    if (lap.is_zero()) break;
    g = lap.shifted(mono(0, 0, 2), Rational(-1, (j + 2) * (j + 1)));
    h += g;
  }
  return HarmonicPoly(std::move(h), degree);
}

std::vector<Rational> harmonic_coordinates(const HarmonicPoly& h) {
  const int s = h.degree();
  std::vector<Rational> coords(static_cast<std::size_t>(2 * s + 1));
  for (const auto& [e, c] : h.poly().terms())
    if (e[2] <= 1) coords[static_cast<std::size_t>(harmonic_order_of_anchor({e[0], e[1], e[2]}))] = c;
  return coords;
}

std::string to_string(const SpherePoly& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [e, c] = *it;
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    const Rational mag = c < 0 ? Rational(-c) : c;
    const bool unit = mag == 1 && total_degree(e) > 0;
    if (!unit) os << mag;
    bool need_star = !unit;
    for (int v = 0; v < 3; ++v) {
      if (e[v] == 0) continue;
      if (need_star) os << "*";
      os << "x" << (v + 1);
      if (e[v] > 1) os << "^" << e[v];
      need_star = true;
    }
  }
  return os.str();
}

}  // namespace nsctl
