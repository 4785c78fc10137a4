#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "nsctl/polynomial.hpp"

namespace nsctl {

// Polynomials in (x1, x2, x3) with exact rational coefficients.
using SpherePoly = Polynomial<Rational>;

SpherePoly sphere_variable(int index);  // 0, 1, 2 -> x1, x2, x3
SpherePoly sphere_constant(const Rational& c);
SpherePoly radius_squared();

// Euclidean Laplacian in R^3.
SpherePoly euclidean_laplacian(const SpherePoly& p);
bool is_harmonic(const SpherePoly& p);

/// Poisson bracket of the restrictions to the unit sphere, computed as the
/// mixed product det[x, grad p, grad q]. With this column order
/// {x1, x2} = x3 and the bracket is the Lie-Poisson bracket of so(3)*.
SpherePoly sphere_poisson(const SpherePoly& p, const SpherePoly& q);

/// Normal form modulo (r^2 - 1): every occurrence of x3^2 is replaced by
/// 1 - x1^2 - x2^2, leaving x3-degree at most one. Two polynomials agree on
/// the sphere iff their normal forms are equal.
SpherePoly reduce_on_sphere(const SpherePoly& p);

/// Splits a polynomial, viewed as a function on the unit sphere, into
/// homogeneous harmonic components keyed by degree. Each homogeneous part of
/// degree d is peeled as h + r^2 p' with h its harmonic projection, and the
/// remainder p' (degree d - 2) is split again. Zero components are omitted.
std::map<int, SpherePoly> harmonic_decompose(const SpherePoly& p);

// A homogeneous harmonic polynomial; construction checks both properties.
class HarmonicPoly {
 public:
  HarmonicPoly(SpherePoly poly, int degree);

  const SpherePoly& poly() const { return poly_; }
  int degree() const { return degree_; }

 private:
  SpherePoly poly_;
  int degree_;
};

// Real harmonic basis of degree s. Order index o in [0, 2s] names the anchor
// monomial x1^a x2^b x3^c (c in {0,1}); the basis element is the unique
// harmonic whose part of x3-degree <= 1 is exactly that monomial.
std::array<int, 3> harmonic_anchor(int degree, int order);
int harmonic_order_of_anchor(const std::array<int, 3>& anchor);
HarmonicPoly harmonic_basis(int degree, int order);

// Coordinates of a degree-s harmonic in the anchor basis (length 2s + 1).
std::vector<Rational> harmonic_coordinates(const HarmonicPoly& h);

std::string to_string(const SpherePoly& p);

}  // namespace nsctl
