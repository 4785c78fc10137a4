#include <doctest.h>

#include <cmath>
#include <complex>
#include <map>
#include <random>

#include "../support/oracle.hpp"
#include "nsctl/galerkin.hpp"

using namespace nsctl;

namespace {

std::shared_ptr<const StructureTable> torus(int box) {
  return std::make_shared<const StructureTable>(StructureTable::torus(box));
}

GalerkinSystem full_system(std::shared_ptr<const StructureTable> t, double nu) {
  return GalerkinSystem(t, modes_within(*t, 0), {}, nu);
}

std::vector<double> random_state(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> q(n);
  for (auto& x : q) x = nd(rng);
  return q;
}

std::size_t local(const GalerkinSystem& s, const ModeId& m) {
  return s.require_local(s.table().require_index(m));
}

}  // namespace

TEST_CASE("rhs examples") {
  const auto t = torus(2);
  const auto sys = full_system(t, 0.0);
  const std::size_t n = sys.dimension();
  const auto c10 = local(sys, ModeId::torus(1, 0, Parity::cos));
  const auto c11 = local(sys, ModeId::torus(1, 1, Parity::cos));

  std::vector<double> q(n, 0.0);
  q[c11] = 1.3;
  for (double v : sys.rhs(q, 0.0, ControlSignal{})) CHECK(v == 0.0);

  const auto visc = full_system(t, 1.0);
  std::vector<double> e(n, 0.0);
  e[c10] = 1.0;
  const auto d = visc.rhs(e, 0.0, ControlSignal{});
  for (std::size_t k = 0; k < n; ++k) CHECK(d[k] == (k == c10 ? -1.0 : 0.0));

  q[c10] = 0.7;
  const auto dq = sys.rhs(q, 0.0, ControlSignal{});
  // Quadratic term is B(q, q) / 2.
  std::vector<double> full(t->size(), 0.0);
  for (std::size_t l = 0; l < n; ++l) full[sys.observed()[l]] = q[l];
  const auto b = bracket_B(full, full, *t);
  const auto c01 = local(sys, ModeId::torus(0, 1, Parity::cos));
  const auto c21 = local(sys, ModeId::torus(2, 1, Parity::cos));
  for (std::size_t k = 0; k < n; ++k) {
    CHECK(dq[k] == doctest::Approx(0.5 * b.value[sys.observed()[k]]).epsilon(1e-14));
    if (k != c01 && k != c21) CHECK(dq[k] == 0.0);
  }
  CHECK(dq[c21] == doctest::Approx(1.3 * 0.7 * 0.25));
  CHECK(dq[c01] == doctest::Approx(-1.3 * 0.7 * 0.25));
}

TEST_CASE("quadratic term matches {Lap^-1 q, q} by quadrature") {
  const auto t = torus(2);
  const auto sys = full_system(t, 0.0);
  const auto q = random_state(sys.dimension(), 21);
  const auto dq = sys.rhs(q, 0.0, ControlSignal{});
  const auto grid = oracle::torus_grid(24);
  std::vector<double> f(grid.w.size());
  for (std::size_t p = 0; p < grid.w.size(); ++p) {
    double px = 0, py = 0, wx = 0, wy = 0;
    for (std::size_t l = 0; l < sys.dimension(); ++l) {
      const auto s = oracle::torus_mode(t->mode(sys.observed()[l]), grid.x[p], grid.y[p]);
      px += q[l] / sys.eigenvalues()[l] * s.dx;
      py += q[l] / sys.eigenvalues()[l] * s.dy;
      wx += q[l] * s.dx;
      wy += q[l] * s.dy;
    }
    f[p] = px * wy - py * wx;
  }
  for (std::size_t l = 0; l < sys.dimension(); ++l) {
    double acc = 0.0, n2 = 0.0;
    for (std::size_t p = 0; p < grid.w.size(); ++p) {
      const double phi = oracle::torus_mode(t->mode(sys.observed()[l]), grid.x[p], grid.y[p]).value;
      acc += grid.w[p] * f[p] * phi;
      n2 += grid.w[p] * phi * phi;
    }
    CHECK(dq[l] == doctest::Approx(acc / n2).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("ordered-pair sum agrees with the complex |m|<|n| half sum") {
  const int box = 2;
  const auto t = torus(box);
  const auto sys = full_system(t, 0.0);
  const auto q = random_state(sys.dimension(), 5);
  const auto dq = sys.rhs(q, 0.0, ControlSignal{});

  // z_k = (a_k - i b_k) / 2 on the half-lattice, z_{-k} = conj(z_k).
  using C = std::complex<double>;
  std::map<std::array<int, 2>, C> z, dz;
  for (std::size_t l = 0; l < sys.dimension(); ++l) {
    const auto& m = t->mode(sys.observed()[l]);
    C& zk = z[m.k];
    zk += m.parity == Parity::cos ? C(q[l] / 2, 0) : C(0, -q[l] / 2);
  }
  for (auto it = z.begin(); it != z.end();) {
    const auto [k, v] = *it++;
    z[{-k[0], -k[1]}] = std::conj(v);
  }
  for (const auto& [k, zk] : z) {
    if (!on_half_lattice(k[0], k[1])) continue;
    C acc = 0;
    for (const auto& [m, zm] : z)
      for (const auto& [nn, zn] : z) {
        if (m[0] + nn[0] != k[0] || m[1] + nn[1] != k[1]) continue;
        const int lm = m[0] * m[0] + m[1] * m[1], ln = nn[0] * nn[0] + nn[1] * nn[1];
        if (!(lm < ln)) continue;
        acc += static_cast<double>(wedge(m, nn)) * (1.0 / lm - 1.0 / ln) * zm * zn;
      }
    dz[k] = acc;
  }
  for (std::size_t l = 0; l < sys.dimension(); ++l) {
    const auto& m = t->mode(sys.observed()[l]);
    const C expect = dz[m.k];
    const double real = m.parity == Parity::cos ? 2.0 * expect.real() : -2.0 * expect.imag();
    CHECK(std::abs(dq[l] - real) <= 1e-12);
  }
}

TEST_CASE("triad antisymmetry and forcing locality") {
  const auto t = torus(2);
  const auto sys = GalerkinSystem(t, modes_within(*t, 0), {t->require_index(ModeId::torus(1, 0, Parity::cos))}, 0.1);
  std::map<std::array<std::size_t, 3>, double> w;
  for (const auto& tr : sys.triads()) w[{tr.i, tr.j, tr.k}] += tr.w * sys.eigenvalues()[tr.i];
  for (const auto& [key, c] : w) CHECK(w[{key[1], key[0], key[2]}] == doctest::Approx(-c));

  const auto q = random_state(sys.dimension(), 9);
  const std::size_t ctl = t->require_index(ModeId::torus(1, 0, Parity::cos));
  ControlSignal u;
  u.channels.push_back(ControlSignal::on_mode(ctl, PiecewiseConstant{{0.0, 1.0}, {2.5}}));
  const auto a = sys.rhs(q, 0.5, ControlSignal{});
  const auto b = sys.rhs(q, 0.5, u);
  for (std::size_t k = 0; k < sys.dimension(); ++k)
    CHECK(b[k] - a[k] == doctest::Approx(k == sys.require_local(ctl) ? 2.5 : 0.0));

  ControlSignal bad;
  bad.channels.push_back(ControlSignal::on_mode(t->require_index(ModeId::torus(1, 1, Parity::cos)),
                                                PiecewiseConstant{{0.0, 1.0}, {1.0}}));
  try {
    sys.rhs(q, 0.0, bad);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
  }
}

TEST_CASE("system construction errors") {
  const auto t = torus(1);
  CHECK_THROWS_AS(GalerkinSystem(t, {}, {}, 0.0), Error);
  CHECK_THROWS_AS(GalerkinSystem(t, {0, 1}, {2}, 0.0), Error);
  CHECK_THROWS_AS(GalerkinSystem(t, {0, 1}, {}, -1.0), Error);
}

TEST_CASE("diagnostics examples") {
  const auto t = torus(2);
  const auto sys = full_system(t, 0.0);
  std::vector<double> q(sys.dimension(), 0.0);
  CHECK(sys.diagnostics(q).energy == 0.0);
  CHECK(sys.diagnostics(q).enstrophy == 0.0);
  q[local(sys, ModeId::torus(1, 0, Parity::cos))] = 2.0;
  CHECK(sys.diagnostics(q).energy == doctest::Approx(2.0));
  CHECK(sys.diagnostics(q).enstrophy == doctest::Approx(2.0));
  std::fill(q.begin(), q.end(), 0.0);
  q[local(sys, ModeId::torus(2, 1, Parity::sin))] = 1.0;
  CHECK(sys.diagnostics(q).energy == doctest::Approx(0.1));
  CHECK(sys.diagnostics(q).enstrophy == doctest::Approx(0.5));
}

TEST_CASE("integrate: exact decay, zero trajectory, conservation") {
  const auto t = torus(2);
  const auto sys = full_system(t, 1.0);
  std::vector<double> q(sys.dimension(), 0.0);
  const auto k = local(sys, ModeId::torus(2, 1, Parity::cos));
  q[k] = 0.8;
  IntegrateOptions opt;
  const auto tr = integrate(sys, q, ControlSignal{}, 1.0, opt);
  CHECK(std::abs(tr.endpoint()[k] - 0.8 * std::exp(-5.0)) <= 10 * opt.rel_tol * 0.8 * std::exp(-5.0));

  const auto zero = integrate(sys, std::vector<double>(sys.dimension(), 0.0), ControlSignal{}, 1.0, {.samples = 4});
  CHECK(zero.times.size() == 5);
  for (const auto& s : zero.states)
    for (double v : s) CHECK(v == 0.0);

  const auto inviscid = full_system(t, 0.0);
  const auto q0 = random_state(inviscid.dimension(), 17, 0.5);
  IntegrateOptions tight{.abs_tol = 1e-11, .rel_tol = 1e-11};
  const auto cons = integrate(inviscid, q0, ControlSignal{}, 2.0, tight);
  const auto d0 = cons.diagnostics.front(), d1 = cons.diagnostics.back();
  CHECK(std::abs(d1.energy - d0.energy) / d0.energy <= 1e-8);
  CHECK(std::abs(d1.enstrophy - d0.enstrophy) / d0.enstrophy <= 1e-8);
  CHECK_THROWS_AS(integrate(sys, q0, ControlSignal{}, -1.0), Error);
}

TEST_CASE("integrate samples are increasing and start at the initial state") {
  const auto t = torus(1);
  const auto sys = full_system(t, 0.1);
  const auto q0 = random_state(sys.dimension(), 3);
  ControlSignal u;
  const auto tr = integrate(sys, q0, u, 1.0, {.samples = 10});
  CHECK(tr.times.size() == 11);
  CHECK(tr.states.front() == q0);
  for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
  CHECK(tr.times.back() == 1.0);
}

TEST_CASE("fixed-step RK4 converges at fourth order") {
  const auto t = torus(2);
  const auto sys = full_system(t, 0.05);
  const auto q0 = random_state(sys.dimension(), 13, 0.5);
  const auto ref = integrate(sys, q0, ControlSignal{}, 1.0, {.abs_tol = 1e-14, .rel_tol = 1e-13}).endpoint();
  auto err = [&](std::size_t steps) {
    const auto x = integrate_fixed(sys, q0, ControlSignal{}, 1.0, steps);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - ref[i]) * (x[i] - ref[i]);
    return std::sqrt(s);
  };
  const double e1 = err(10), e2 = err(20);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 3.7);
  CHECK(order <= 4.3);
}

TEST_CASE("piecewise profiles") {
  const PiecewiseConstant pc{{0.0, 1.0, 2.0}, {3.0, -1.0}};
  CHECK(profile_value(pc, 0.5) == 3.0);
  CHECK(profile_value(pc, 1.0) == -1.0);
  CHECK(profile_value(pc, 2.0) == -1.0);
  CHECK(profile_value(pc, 2.5) == 0.0);
  const PiecewiseLinear pl{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}};
  CHECK(pl.value(0.5) == 0.5);
  CHECK(pl.slope(1.5) == -1.0);
  CHECK_THROWS_AS(validate_profile(PiecewiseConstant{{1.0, 0.0}, {1.0}}), Error);
  CHECK_THROWS_AS(validate_profile(PiecewiseLinear{{0.0}, {1.0}}), Error);
  CHECK_THROWS_AS(validate_profile(OscillatoryDerivative{1.0, 0.0, pl}), Error);
}

TEST_CASE("piece lookup by locate point") {
  const PiecewiseConstant pc{{0.0, 1.0, 2.0}, {3.0, -1.0}};
  CHECK(profile_value(pc, 1.0, 0.5) == 3.0);
  CHECK(profile_value(pc, 1.0, 1.5) == -1.0);
  CHECK(profile_value(pc, 2.0, 1.5) == -1.0);
  const PiecewiseLinear pl{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}};
  CHECK(pl.value_on(1.2, 0.5) == doctest::Approx(1.2));
  CHECK(pl.value_on(1.2, 1.5) == doctest::Approx(0.8));
  CHECK(pl.value_on(0.5, 2.5) == 0.0);
}

TEST_CASE("piecewise-constant forcing: breakpoints do not trigger step rejections") {
  // Linear decoupled mode: q' = lambda q + u(t) has a closed form per segment.
  const auto t = torus(1);
  const std::vector<std::size_t> obs{t->require_index(ModeId::torus(1, 0, Parity::cos))};
  const GalerkinSystem sys(t, obs, obs, 0.5);
  const double lam = -0.5;  // nu * lambda
  PiecewiseConstant pc;
  const int P = 16;
  for (int i = 0; i <= P; ++i) pc.breaks.push_back(2.0 * i / P);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int i = 0; i < P; ++i) pc.values.push_back(nd(rng));
  ControlSignal u{{ControlSignal::on_mode(obs[0], pc)}};
  const auto tr = integrate(sys, std::vector<double>{0.3}, u, 2.0, {.abs_tol = 1e-12, .rel_tol = 1e-10});
  double q = 0.3;
  for (int i = 0; i < P; ++i) {
    const double h = pc.breaks[i + 1] - pc.breaks[i];
    q = std::exp(lam * h) * q + pc.values[i] * (std::exp(lam * h) - 1.0) / lam;
  }
  CHECK(std::abs(tr.endpoint()[0] - q) <= 1e-9);
  CHECK(tr.rejected_steps <= static_cast<std::size_t>(P));
  // Fixed steps aligned with the breakpoints stay on their segment too.
  const auto x = integrate_fixed(sys, std::vector<double>{0.3}, u, 2.0, 4 * P);
  CHECK(std::abs(x[0] - q) <= 1e-6);
}
