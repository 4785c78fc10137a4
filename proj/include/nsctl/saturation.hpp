#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <vector>

#include "nsctl/spectral.hpp"

namespace nsctl {

using LatticeVec = std::array<int, 2>;
using LatticeSet = std::set<LatticeVec>;

// K plus every m + n with m, n in K, |m| != |n| and m ^ n != 0. The origin is
// never produced (m + n = 0 forces m ^ n = 0).
LatticeSet lattice_closure_step(const LatticeSet& k);

enum class ClosureVerdict { filled, not_filled, inconclusive };
const char* to_string(ClosureVerdict v);

struct LatticeStep {
  int j = 0;
  std::vector<LatticeVec> added;  // sorted
  std::size_t cumulative_size = 0;
};

struct LatticeClosure {
  LatticeSet set;
  std::vector<LatticeStep> steps;
  ClosureVerdict verdict = ClosureVerdict::not_filled;
  bool fixpoint = false;
};

/// Iterates the closure step intersected with the box |k|_inf <= box until a
/// fixpoint or `max_steps`. The verdict is `filled` when the fixpoint is the
/// whole box minus the origin and `inconclusive` when the cap stops the
/// iteration first.
LatticeClosure lattice_saturation_closure(const LatticeSet& k, int box, int max_steps);

/// gcd of all pairwise wedges equals 1 and some noncollinear pair has
/// different lengths.
bool is_saturating_gcd(const LatticeSet& k);

bool is_symmetric(const LatticeSet& k);

// Linear span of coefficient vectors with an orthonormal working basis
// (modified Gram-Schmidt, two passes). A vector is accepted when its residual
// exceeds rel_tol times its own norm.
class SubspaceBasis {
 public:
  explicit SubspaceBasis(std::size_t ambient = 0, double rel_tol = 1e-10);

  std::size_t ambient() const { return ambient_; }
  std::size_t dimension() const { return q_.size(); }
  double tolerance() const { return tol_; }
  const std::vector<std::vector<double>>& orthonormal() const { return q_; }

  bool add(std::span<const double> v);
  std::vector<double> project(std::span<const double> v) const;
  // ||v - P v||
  double distance(std::span<const double> v) const;
  bool contains_mode(std::size_t i, double tol) const;

 private:
  std::size_t ambient_;
  double tol_;
  std::vector<std::vector<double>> q_;
};

enum class SteadyFilter { conservative, permissive };
enum class ClosureStop { fixpoint, step_cap, dim_cap };
const char* to_string(SteadyFilter f);
const char* to_string(ClosureStop s);

struct ClosureOptions {
  SteadyFilter filter = SteadyFilter::conservative;
  int max_steps = 20;
  std::size_t dim_cap = 0;  // 0: no cap besides the table size
  double rank_tol = 1e-10;
};

struct SpanStep {
  int j = 0;
  std::size_t added = 0;
  std::size_t dimension = 0;
  std::size_t steady_dimension = 0;  // dim S^j used to form the step
  double truncated_growth = 0.0;     // bracket weight that escaped the table
};

struct SpanClosure {
  SubspaceBasis basis;
  std::vector<SpanStep> steps;  // steps[0] is the generator span
  ClosureStop stop = ClosureStop::fixpoint;
};

using StepObserver = std::function<void(const SpanStep&, const SubspaceBasis&)>;

/// D^0 = span(generators); D^{j+1} = D^j + span B(S^j, D^j), where S^j is the
/// steady part of D^j selected by the filter.
SpanClosure span_closure(const std::vector<std::vector<double>>& generators,
                         const StructureTable& table, const ClosureOptions& options = {},
                         const StepObserver& observer = {});

// Orthonormal basis of the steady part of D under a filter.
std::vector<std::vector<double>> steady_part(const SubspaceBasis& d, const StructureTable& table,
                                             SteadyFilter filter);

// Table modes whose basis vector lies in the span (distance <= tol).
std::vector<std::size_t> contained_modes(const SubspaceBasis& basis, double tol);

struct ProjectedRank {
  std::size_t rank = 0;
  bool full_rank = false;
};

/// Rank of the span restricted to the coordinates in `l`.
ProjectedRank projected_rank(const SubspaceBasis& basis, std::span<const std::size_t> l,
                             double rank_tol = 1e-10);

}  // namespace nsctl
