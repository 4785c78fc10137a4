#include <doctest.h>

#include <random>

#include "nsctl/saturation.hpp"

using namespace nsctl;

namespace {

std::vector<double> unit(const StructureTable& t, const ModeId& m) {
  std::vector<double> v(t.size(), 0.0);
  v[t.require_index(m)] = 1.0;
  return v;
}

const LatticeSet kCanonical{{1, 0}, {-1, 0}, {1, 1}, {-1, -1}};

}  // namespace

TEST_CASE("lattice_closure_step examples") {
  const auto s = lattice_closure_step(kCanonical);
  LatticeSet expected = kCanonical;
  for (LatticeVec v : {LatticeVec{2, 1}, {0, -1}, {0, 1}, {-2, -1}}) expected.insert(v);
  CHECK(s == expected);

  const LatticeSet collinear{{1, 0}, {-1, 0}, {2, 0}};
  CHECK(lattice_closure_step(collinear) == collinear);
  const LatticeSet axes{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  CHECK(lattice_closure_step(axes) == axes);
  CHECK(is_symmetric(s));
}

TEST_CASE("lattice_saturation_closure examples") {
  const auto c = lattice_saturation_closure(kCanonical, 10, 50);
  CHECK(c.verdict == ClosureVerdict::filled);
  CHECK(c.set.size() == 21u * 21u - 1u);
  std::size_t prev = kCanonical.size();
  for (const auto& step : c.steps) {
    CHECK(step.cumulative_size >= prev);
    prev = step.cumulative_size;
  }
  CHECK(lattice_closure_step(c.set).size() > c.set.size());  // unbounded step leaves the box
  const auto c2 = lattice_saturation_closure({{1, 0}, {-1, 0}, {0, 2}, {0, -2}}, 6, 50);
  CHECK(c2.verdict == ClosureVerdict::not_filled);
  CHECK(c2.set.count({0, 1}) == 0);
  const auto c3 = lattice_saturation_closure({}, 3, 50);
  CHECK(c3.verdict == ClosureVerdict::not_filled);
  CHECK(c3.set.empty());
  const auto c4 = lattice_saturation_closure(kCanonical, 10, 1);
  CHECK(c4.verdict == ClosureVerdict::inconclusive);
  CHECK_THROWS_AS(lattice_saturation_closure({{5, 0}, {-5, 0}}, 3, 10), Error);
}

TEST_CASE("gcd criterion examples") {
  CHECK(is_saturating_gcd(kCanonical));
  CHECK(!is_saturating_gcd({{1, 0}, {-1, 0}, {0, 2}, {0, -2}}));
  CHECK(!is_saturating_gcd({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
}

TEST_CASE("gcd criterion agrees with closure on random sets") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coord(-4, 4), count(1, 3);
  for (int trial = 0; trial < 40; ++trial) {
    LatticeSet k;
    const int c = count(rng);
    while (static_cast<int>(k.size()) < 2 * c) {
      const LatticeVec v{coord(rng), coord(rng)};
      if (v == LatticeVec{0, 0}) continue;
      k.insert(v);
      k.insert({-v[0], -v[1]});
    }
    const auto closure = lattice_saturation_closure(k, 12, 50);
    REQUIRE(closure.verdict != ClosureVerdict::inconclusive);
    CHECK(is_saturating_gcd(k) == (closure.verdict == ClosureVerdict::filled));
    CHECK(is_symmetric(closure.set));
    CHECK(lattice_saturation_closure(closure.set, 12, 1).steps.empty());
  }
}

TEST_CASE("SubspaceBasis") {
  SubspaceBasis b(3);
  CHECK(b.add(std::vector<double>{1, 1, 0}));
  CHECK(!b.add(std::vector<double>{2, 2, 0}));
  CHECK(b.add(std::vector<double>{1, 0, 0}));
  CHECK(b.dimension() == 2);
  CHECK(b.contains_mode(1, 1e-12));
  CHECK(!b.contains_mode(2, 1e-12));
  CHECK(b.distance(std::vector<double>{0, 0, 3}) == doctest::Approx(3.0));
  CHECK(!b.add(std::vector<double>{0, 0, 0}));
  CHECK_THROWS_AS(b.add(std::vector<double>{1}), Error);
}

TEST_CASE("span_closure on the sphere: linear harmonics close") {
  const auto t = StructureTable::sphere(3);
  const auto c = span_closure({unit(t, ModeId::sphere(1, 0)), unit(t, ModeId::sphere(1, 1)),
                               unit(t, ModeId::sphere(1, 2))},
                              t);
  CHECK(c.basis.dimension() == 3);
  CHECK(c.stop == ClosureStop::fixpoint);
}

TEST_CASE("span_closure on the torus: saturating quadruple fills a small box") {
  const auto t = StructureTable::torus(2);
  std::vector<std::vector<double>> gens;
  for (auto p : {Parity::cos, Parity::sin})
    for (auto k : {LatticeVec{1, 0}, LatticeVec{1, 1}}) gens.push_back(unit(t, ModeId::torus(k[0], k[1], p)));
  for (auto filter : {SteadyFilter::conservative, SteadyFilter::permissive}) {
    ClosureOptions opt;
    opt.filter = filter;
    const auto c = span_closure(gens, t, opt);
    CHECK(c.basis.dimension() == t.size());
    for (std::size_t s = 1; s < c.steps.size(); ++s) CHECK(c.steps[s].dimension >= c.steps[s - 1].dimension);
    std::vector<std::size_t> all(t.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    CHECK(projected_rank(c.basis, all).full_rank);
  }
}

TEST_CASE("span_closure dimension is invariant under recombination of generators") {
  const auto t = StructureTable::torus(2);
  const auto a = unit(t, ModeId::torus(1, 0, Parity::cos));
  const auto b = unit(t, ModeId::torus(1, 1, Parity::cos));
  std::vector<double> s(t.size()), d(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    s[i] = 2.0 * a[i] + 3.0 * b[i];
    d[i] = a[i] - b[i];
  }
  ClosureOptions opt;
  opt.rank_tol = 1e-9;
  opt.filter = SteadyFilter::permissive;
  CHECK(span_closure({a, b}, t, opt).basis.dimension() == span_closure({s, d}, t, opt).basis.dimension());
}

TEST_CASE("projected_rank examples") {
  const auto t = StructureTable::torus(2);
  const auto i = t.require_index(ModeId::torus(1, 0, Parity::cos));
  const auto j = t.require_index(ModeId::torus(1, 1, Parity::cos));
  const auto c = span_closure({unit(t, t.mode(i)), unit(t, t.mode(j))}, t, {.max_steps = 0});
  const std::vector<std::size_t> l{i, j};
  CHECK(projected_rank(c.basis, l).full_rank);
  // A cos-only span cannot see a sin coordinate.
  const std::vector<std::size_t> l2{i, t.require_index(ModeId::torus(1, 0, Parity::sin))};
  const auto r = projected_rank(c.basis, l2);
  CHECK(r.rank == 1);
  CHECK(!r.full_rank);
  CHECK_THROWS_AS(projected_rank(c.basis, std::vector<std::size_t>{}), Error);
}
