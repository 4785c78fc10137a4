#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nsctl/galerkin.hpp"
#include "nsctl/polynomial.hpp"

namespace nsctl {

// Polynomial vector field on R^N: one polynomial per coordinate.
template <typename T>
struct PolyVectorField {
  std::vector<Polynomial<T>> comps;

  PolyVectorField() = default;
  explicit PolyVectorField(std::size_t dim) : comps(dim, Polynomial<T>(dim)) {}

  std::size_t dimension() const { return comps.size(); }
  bool is_zero() const {
    for (const auto& c : comps)
      if (!c.is_zero()) return false;
    return true;
  }

  static PolyVectorField constant(std::span<const T> v) {
    PolyVectorField f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f.comps[i] = Polynomial<T>::constant(v.size(), v[i]);
    return f;
  }

  template <typename U>
  std::vector<U> evaluate(std::span<const U> x) const {
    std::vector<U> out;
    out.reserve(comps.size());
    for (const auto& c : comps) out.push_back(c.template evaluate<U>(x));
    return out;
  }

  friend bool operator==(const PolyVectorField& a, const PolyVectorField& b) { return a.comps == b.comps; }
  friend PolyVectorField operator+(PolyVectorField a, const PolyVectorField& b) {
    a.check(b);
    for (std::size_t i = 0; i < a.comps.size(); ++i) a.comps[i] += b.comps[i];
    return a;
  }
  friend PolyVectorField operator-(PolyVectorField a, const PolyVectorField& b) {
    a.check(b);
    for (std::size_t i = 0; i < a.comps.size(); ++i) a.comps[i] -= b.comps[i];
    return a;
  }
  friend PolyVectorField operator*(const T& s, PolyVectorField a) {
    for (auto& c : a.comps) c *= s;
    return a;
  }

  void check(const PolyVectorField& o) const {
    if (o.comps.size() != comps.size())
      throw Error(ErrorKind::invalid_argument, "vector field dimension mismatch");
  }
};

/// [X, Y] = (DY) X - (DX) Y.
template <typename T>
PolyVectorField<T> poly_bracket(const PolyVectorField<T>& x, const PolyVectorField<T>& y) {
  x.check(y);
  const std::size_t n = x.dimension();
  PolyVectorField<T> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!x.comps[j].is_zero()) {
        const auto dy = y.comps[i].derivative(j);
        if (!dy.is_zero()) out.comps[i] += dy * x.comps[j];
      }
      if (!y.comps[j].is_zero()) {
        const auto dx = x.comps[i].derivative(j);
        if (!dx.is_zero()) out.comps[i] -= dx * y.comps[j];
      }
    }
  return out;
}

using VectorField = PolyVectorField<double>;

// Drift of a Galerkin system as an exact quadratic field in local coordinates.
VectorField galerkin_drift_field(const GalerkinSystem& sys);
// Constant unit fields on the controlled coordinates.
std::vector<VectorField> galerkin_control_fields(const GalerkinSystem& sys);

struct LieRankOptions {
  bool zero_time = false;  // ideal generated by fields[1..] instead of the whole algebra
  double rank_tol = 1e-10;
  std::size_t max_fields = 5000;
};

struct LieRankResult {
  std::size_t rank = 0;
  std::size_t fields_considered = 0;  // symbolically independent brackets
  int depth_reached = 0;
};

/// Rank at x of all iterated brackets of `fields` up to `depth` (depth 1 is the
/// fields themselves). fields[0] plays the drift in the zero-time variant.
/// Brackets are right-normed [f_a, [f_b, ...]], and any bracket that is a
/// constant-coefficient combination of earlier ones is pruned before it is
/// extended. Stops early at full rank.
LieRankResult lie_rank_at(const std::vector<VectorField>& fields, std::span<const double> x, int depth,
                          const LieRankOptions& options = {});

struct SteerOptions {
  std::size_t segments = 16;
  double tol = 1e-3;
  int max_iter = 60;
  int restarts = 8;
  int batch = 0;  // restarts run concurrently in batches of this size; 0 = hardware threads
  double amplitude_bound = 100.0;
  double init_scale = 1.0;  // std-dev of random initial controls
  std::uint64_t seed = 0;
  IntegrateOptions integrator{.abs_tol = 1e-12, .rel_tol = 1e-10};
};

struct SteeringResult {
  std::vector<std::vector<double>> controls;  // per controlled mode, P values
  std::vector<double> endpoint;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 0;
  std::uint64_t seed = 0;
  std::vector<double> history;  // residual per iteration of the chosen restart, initial value first
};

ControlSignal piecewise_controls(const GalerkinSystem& sys, const std::vector<std::vector<double>>& values,
                                 double t_end);

/// Damped least squares (Levenberg-Marquardt, central-difference Jacobian) on
/// piecewise-constant controls. Restart 0 starts from zero controls, the rest
/// from seeded random ones. The first converged restart (by index) wins. The reported residual comes from a fresh
/// simulation of the returned controls.
SteeringResult steer(const GalerkinSystem& sys, std::span<const double> q_start, std::span<const double> q_target,
                     double t_end, const SteerOptions& options = {});

using Point2 = std::array<double, 2>;

struct CoveringResult {
  bool covered = false;
  bool degenerate = false;
  std::size_t test_points = 0;
  std::size_t uncovered = 0;
};

/// `grid[i][j]` is the projected endpoint for parameters (i, j). The disc is
/// covered when every test lattice point inside it has nonzero winding number
/// with respect to the image of the parameter-square boundary.
CoveringResult covering_check(const std::vector<std::vector<Point2>>& grid, Point2 center, double radius,
                              int lattice = 9);

// Samples a 2-parameter map on an n x n grid over [lo0,hi0] x [lo1,hi1].
std::vector<std::vector<Point2>> sample_parameter_grid(const std::function<Point2(double, double)>& map,
                                                       Point2 lo, Point2 hi, int n);

int winding_number(std::span<const Point2> closed_polygon, Point2 p);

}  // namespace nsctl
