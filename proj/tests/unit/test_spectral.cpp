#include <doctest.h>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>

#include "../support/oracle.hpp"
#include "nsctl/spectral.hpp"

using namespace nsctl;

namespace {

double coeff_of(const Expansion& e, const ModeId& m) {
  for (const auto& [id, c] : e)
    if (id == m) return c;
  return 0.0;
}

std::vector<double> unit(const StructureTable& t, const ModeId& m) {
  std::vector<double> v(t.size(), 0.0);
  v[t.require_index(m)] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("mode labels round trip") {
  for (const auto& m : {ModeId::torus(1, 0, Parity::cos), ModeId::torus(2, -1, Parity::sin),
                        ModeId::rectangle(1, 2), ModeId::sphere(2, 3)})
    CHECK(ModeId::parse(m.label()) == m);
  CHECK(ModeId::torus(2, -1, Parity::sin).label() == "s_2_-1");
  CHECK_THROWS_AS(ModeId::torus(-1, 0, Parity::cos), Error);
  CHECK_THROWS_AS(ModeId::torus(0, 0, Parity::cos), Error);
  CHECK_THROWS_AS(ModeId::rectangle(0, 1), Error);
  CHECK_THROWS_AS(ModeId::sphere(1, 3), Error);
  CHECK_THROWS_AS(ModeId::parse("c_1"), Error);
  CHECK_THROWS_AS(ModeId::parse("q_1_1"), Error);
  CHECK_THROWS_AS(ModeId::parse("c_1_x"), Error);
}

TEST_CASE("eigenvalues") {
  CHECK(eigenvalue(ModeId::torus(2, 1, Parity::cos)) == -5.0);
  CHECK(eigenvalue(ModeId::sphere(2, 0)) == -6.0);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(eigenvalue(ModeId::rectangle(1, 1)) == doctest::Approx(-pi2 * 1.5).epsilon(1e-14));
}

TEST_CASE("torus_structure examples") {
  const auto e = torus_structure({1, 1}, Parity::cos, {1, 0}, Parity::cos);
  REQUIRE(e.size() == 2);
  CHECK(coeff_of(e, ModeId::torus(0, 1, Parity::cos)) == -0.5);
  CHECK(coeff_of(e, ModeId::torus(2, 1, Parity::cos)) == 0.5);
  CHECK(torus_structure({1, 2}, Parity::cos, {2, 4}, Parity::sin).empty());
  CHECK(torus_structure({-1, -2}, Parity::sin, {2, 4}, Parity::sin).empty());
  CHECK(torus_structure({1, 1}, Parity::cos, {1, 1}, Parity::cos).empty());
  CHECK_THROWS_AS(torus_structure({0, 0}, Parity::cos, {1, 0}, Parity::cos), Error);
}

TEST_CASE("torus_structure antisymmetry over all parities") {
  for (auto pk : {Parity::cos, Parity::sin})
    for (auto pl : {Parity::cos, Parity::sin}) {
      const auto a = torus_structure({2, -1}, pk, {1, 3}, pl);
      const auto b = torus_structure({1, 3}, pl, {2, -1}, pk);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(a[i].second == -b[i].second);
      }
    }
}

TEST_CASE("rect_structure examples") {
  const auto e = rect_structure({1, 1}, {1, 2}, 1.0, std::numbers::sqrt2);
  REQUIRE(e.size() == 2);
  CHECK(e[0].first == ModeId::rectangle(2, 1));
  CHECK(e[1].first == ModeId::rectangle(2, 3));
  CHECK(rect_structure({2, 3}, {2, 3}, 1.0, 2.0).empty());
  CHECK_THROWS_AS(rect_structure({1, 1}, {1, 2}, 0.0, 1.0), Error);
  CHECK_THROWS_AS(rect_structure({1, 1}, {1, 2}, 1.0, -1.0), Error);

  // (1,1),(2,2) against quadrature on a table large enough to hold every output.
  const auto t = StructureTable::rectangle(3);
  const auto s = oracle::sample_table(t);
  const auto numeric = oracle::projected_bracket(s, t.require_index(ModeId::rectangle(1, 1)),
                                                 t.require_index(ModeId::rectangle(2, 2)));
  const auto analytic = rect_structure({1, 1}, {2, 2}, t.params().geometry.a, t.params().geometry.b);
  CHECK(analytic.size() <= 4);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double c = coeff_of(analytic, t.mode(k));
    CHECK(std::abs(c - numeric[k]) <= 1e-8 * std::max(1.0, std::abs(c)));
  }
}

TEST_CASE("generated tables are antisymmetric with empty diagonal") {
  for (const auto& t : {StructureTable::torus(2), StructureTable::rectangle(3), StructureTable::sphere(3)}) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t.bracket(i, i).empty());
      for (std::size_t j = 0; j < t.size(); ++j) {
        const auto a = t.bracket(i, j);
        const auto b = t.bracket(j, i);
        REQUIRE(a.size() == b.size());
        for (std::size_t q = 0; q < a.size(); ++q) {
          CHECK(a[q].mode == b[q].mode);
          CHECK(a[q].coeff == -b[q].coeff);
        }
        CHECK(t.truncated_weight(i, j) == t.truncated_weight(j, i));
      }
    }
  }
}

TEST_CASE("quadrature oracle on small torus and rectangle tables") {
  const auto torus = oracle::check_table(StructureTable::torus(2), 1e-8);
  CHECK(torus.worst <= 1e-8);
  const auto rect = oracle::check_table(StructureTable::rectangle(4), 1e-8);
  CHECK(rect.worst <= 1e-8);
  // And with a non-default aspect ratio.
  const auto rect2 = oracle::check_table(StructureTable::rectangle(3, {2.0, 0.7}), 1e-8);
  CHECK(rect2.worst <= 1e-8);
}

TEST_CASE("truncated weight records escaping modes") {
  const auto t = StructureTable::torus(1);
  const auto i = t.require_index(ModeId::torus(1, 1, Parity::cos));
  const auto j = t.require_index(ModeId::torus(1, 0, Parity::cos));
  // cos(2,1) is outside the box.
  CHECK(t.truncated_weight(i, j) == 0.5);
  REQUIRE(t.bracket(i, j).size() == 1);
  CHECK(t.mode(t.bracket(i, j)[0].mode) == ModeId::torus(0, 1, Parity::cos));
}

TEST_CASE("bracket_B examples") {
  const auto t = StructureTable::torus(2);
  const auto k = unit(t, ModeId::torus(1, 1, Parity::cos));
  const auto l = unit(t, ModeId::torus(1, 0, Parity::cos));
  const auto b = bracket_B(k, l, t);
  // (1/lambda_k - 1/lambda_l) {cos k, cos l} = (1/2) (-1/2 cos(0,1) + 1/2 cos(2,1)).
  CHECK(b.value[t.require_index(ModeId::torus(2, 1, Parity::cos))] == doctest::Approx(0.25));
  CHECK(b.value[t.require_index(ModeId::torus(0, 1, Parity::cos))] == doctest::Approx(-0.25));
  CHECK(b.truncated == 0.0);

  const auto e10 = unit(t, ModeId::torus(1, 0, Parity::sin));
  const auto e01 = unit(t, ModeId::torus(0, 1, Parity::cos));
  for (double v : bracket_B(e10, e01, t).value) CHECK(v == 0.0);
  for (std::size_t m = 0; m < t.size(); ++m) {
    std::vector<double> f(t.size(), 0.0);
    f[m] = 1.7;
    for (double v : bracket_B(f, f, t).value) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(bracket_B(std::vector<double>(3), l, t), Error);
}

TEST_CASE("bracket_B matches the complex-exponential coefficient") {
  // With e_k = exp(i k.x): cos k = (e_k + e_-k)/2. The complex formula gives
  // B(e_k, e_l) = (k^l)(|k|^-2 - |l|^-2) e_{k+l} up to the common sign of the
  // bracket orientation. Check the (2,1) component for k=(1,1), l=(1,0).
  const std::array<int, 2> k{1, 1}, l{1, 0};
  const double w = wedge(k, l);
  const double coeff = w * (1.0 / 2.0 - 1.0 / 1.0);
  CHECK(coeff == 0.5);
  // Real basis: cos k cos l contributes (1/4)[e_{k+l} + e_{-k-l}] * coeff twice
  // over the pairs (k,l), (-k,-l); cos(2,1) picks up half of that.
  const auto t = StructureTable::torus(2);
  const auto b = bracket_B(unit(t, ModeId::torus(1, 1, Parity::cos)),
                           unit(t, ModeId::torus(1, 0, Parity::cos)), t);
  CHECK(b.value[t.require_index(ModeId::torus(2, 1, Parity::cos))] == doctest::Approx(coeff / 2.0));
}

TEST_CASE("bracket_B is symmetric on random vectors") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (const auto& t : {StructureTable::torus(2), StructureTable::rectangle(3)}) {
    std::vector<double> f1(t.size()), f2(t.size());
    for (auto& v : f1) v = nd(rng);
    for (auto& v : f2) v = nd(rng);
    const auto a = bracket_B(f1, f2, t);
    const auto b = bracket_B(f2, f1, t);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(a.value[i] == doctest::Approx(b.value[i]).epsilon(1e-12));
  }
}

TEST_CASE("table JSON round trip") {
  for (const auto& t : {StructureTable::torus(2), StructureTable::rectangle(2, {1.5, 0.5}),
                        StructureTable::sphere(2)}) {
    const auto doc = t.to_json();
    const auto back = StructureTable::from_json(doc);
    REQUIRE(back.size() == t.size());
    CHECK(back.domain() == t.domain());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(back.mode(i) == t.mode(i));
      CHECK(back.eigenvalues()[i] == t.eigenvalues()[i]);
      for (std::size_t j = 0; j < t.size(); ++j) {
        CHECK(back.bracket(i, j).size() == t.bracket(i, j).size());
        CHECK(back.truncated_weight(i, j) == t.truncated_weight(i, j));
      }
    }
    CHECK(back.to_json() == doc);
  }
  CHECK_THROWS_AS(StructureTable::from_json(nlohmann::json{{"domain", "torus"}}), Error);
  CHECK_THROWS_AS(StructureTable::from_json(nlohmann::json{{"domain", "disk"}}), Error);
}

TEST_CASE("sphere table structure") {
  const auto t = StructureTable::sphere(2);
  CHECK(t.size() == 8);
  // Linear harmonics: orders 0,1,2 are x1, x2, x3.
  const auto x1 = t.require_index(ModeId::sphere(1, 0));
  const auto x2 = t.require_index(ModeId::sphere(1, 1));
  const auto x3 = t.require_index(ModeId::sphere(1, 2));
  REQUIRE(t.bracket(x1, x2).size() == 1);
  CHECK(t.bracket(x1, x2)[0].mode == x3);
  CHECK(t.bracket(x1, x2)[0].coeff == 1.0);
  REQUIRE(t.bracket(x3, x1).size() == 1);
  CHECK(t.bracket(x3, x1)[0].mode == x2);
  CHECK(t.bracket(x3, x1)[0].coeff == 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.eigenvalues()[i] == -t.mode(i).degree() * (t.mode(i).degree() + 1.0));
}
