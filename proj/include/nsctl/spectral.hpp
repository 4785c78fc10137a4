#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nsctl/sphere.hpp"

namespace nsctl {

enum class Domain { torus, rectangle, sphere };
enum class Parity { cos, sin };

const char* to_string(Domain d);
Domain domain_from_string(const std::string& s);

// Basis-element label.
//   torus:     k = lattice vector on the lexicographic half-lattice, parity cos/sin
//   rectangle: k = (k1, k2), both >= 1
//   sphere:    k = (degree s >= 1, order index 0..2s)
struct ModeId {
  Domain domain = Domain::torus;
  std::array<int, 2> k{0, 0};
  Parity parity = Parity::cos;

  static ModeId torus(int k1, int k2, Parity p);
  static ModeId rectangle(int k1, int k2);
  static ModeId sphere(int degree, int order);

  int degree() const { return k[0]; }
  int order() const { return k[1]; }

  // "c_1_0", "s_2_-1", "r_1_2", "y_2_3"
  std::string label() const;
  static ModeId parse(const std::string& label);

  auto operator<=>(const ModeId&) const = default;
};

bool on_half_lattice(int k1, int k2);
int wedge(const std::array<int, 2>& a, const std::array<int, 2>& b);

struct Geometry {
  double a = 1.0;
  double b = 1.4142135623730951;  // sqrt(2)
};

// Laplace-Beltrami eigenvalue of a mode. Rectangle modes use `g`; the others
// ignore it.
double eigenvalue(const ModeId& mode, const Geometry& g = {});

using Expansion = std::vector<std::pair<ModeId, double>>;

/// {basis(k,pk), basis(l,pl)} over the real torus basis (period 2*pi), with
/// {f,g} = f_1 g_2 - f_2 g_1. Product-to-sum terms are folded onto the
/// half-lattice; the result is empty when k and l are collinear.
Expansion torus_structure(std::array<int, 2> k, Parity pk, std::array<int, 2> l, Parity pl);

/// {phi^k, phi^l} for phi^k = sin(pi k1 x1 / a) sin(pi k2 x2 / b). At most four
/// output modes (|k1 +- l1|, |k2 +- l2|); modes with a zero index are dropped.
Expansion rect_structure(std::array<int, 2> k, std::array<int, 2> l, double a, double b);

struct Term {
  std::size_t mode;
  double coeff;
};

struct TableParams {
  int box = 0;         // torus: |k|_inf <= box; rectangle: k1, k2 <= box
  int max_degree = 0;  // sphere
  Geometry geometry;
};

// Immutable table of Poisson-bracket structure constants over a finite mode
// list: {phi^i, phi^j} = sum_k C^{ij}_k phi^k, plus the eigenvalues.
class StructureTable {
 public:
  static StructureTable torus(int box);
  static StructureTable rectangle(int box, Geometry g = {});
  static StructureTable sphere(int max_degree);

  Domain domain() const { return domain_; }
  const TableParams& params() const { return params_; }
  std::size_t size() const { return modes_.size(); }
  std::span<const ModeId> modes() const { return modes_; }
  std::span<const double> eigenvalues() const { return lambda_; }
  const ModeId& mode(std::size_t i) const { return modes_.at(i); }
  std::optional<std::size_t> index_of(const ModeId& m) const;
  std::size_t require_index(const ModeId& m) const;

  // In-table terms of {phi^i, phi^j}.
  std::span<const Term> bracket(std::size_t i, std::size_t j) const {
    return entries_[i * modes_.size() + j];
  }
  // Sum of |c| over output modes that fall outside the table.
  double truncated_weight(std::size_t i, std::size_t j) const {
    return truncated_[i * modes_.size() + j];
  }

  nlohmann::json to_json() const;
  static StructureTable from_json(const nlohmann::json& doc);

  // Sphere tables only: the polynomial representative of a mode.
  const SpherePoly& sphere_polynomial(std::size_t i) const;

 private:
  StructureTable(Domain d, TableParams p, std::vector<ModeId> modes);
  void set_entry(std::size_t i, std::size_t j, std::vector<Term> terms, double truncated);

  Domain domain_;
  TableParams params_;
  std::vector<ModeId> modes_;
  std::vector<double> lambda_;
  std::vector<std::vector<Term>> entries_;
  std::vector<double> truncated_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<SpherePoly> sphere_polys_;
};

struct BracketResult {
  std::vector<double> value;
  double truncated = 0.0;  // weight that escaped the table
};

/// B(f1, f2) = [f1, [f2, f0]] for the drift f0 = {Lap^{-1} q, q}, i.e.
/// {Lap^{-1} f1, f2} + {Lap^{-1} f2, f1}. Symmetric; for eigenbasis elements
/// it equals (1/lambda_1 - 1/lambda_2) {f1, f2}.
BracketResult bracket_B(std::span<const double> f1, std::span<const double> f2,
                        const StructureTable& table);

/// Expresses a polynomial on the sphere in a sphere table's basis. Harmonic
/// components of degree 0 or above the table's cutoff are reported through
/// `dropped`.
std::vector<double> sphere_coordinates(const SpherePoly& p, const StructureTable& table,
                                       double* dropped = nullptr);

}  // namespace nsctl
