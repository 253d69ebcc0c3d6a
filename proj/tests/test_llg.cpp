#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "llhmm/errors.hpp"
#include "llhmm/fd.hpp"
#include "llhmm/llg.hpp"

using namespace llhmm;

namespace {
constexpr double kTwoPi = 2.0 * M_PI;

FieldProvider zero_field() {
  return [](const VecField& m, double, VecField& H) {
    H.grid = m.grid;
    H.v.assign(m.size(), Vec3{});
  };
}

FieldProvider constant_field(Vec3 c) {
  return [c](const VecField& m, double, VecField& H) {
    H.grid = m.grid;
    H.v.assign(m.size(), c);
  };
}

FieldProvider exchange_field(const HalfPointCoefficient& a) {
  return [a](const VecField& m, double, VecField& H) { div_a_grad(a, m, H); };
}

VecField single_spin(Vec3 m) {
  VecField f(Grid::periodic(1, 1, 1.0));
  f[0] = m;
  return f;
}

VecField smooth_initial(const Grid& g) {
  return sample_field(g, [](const Vec3& x) {
    return normalized(Vec3{0.5 + std::sin(kTwoPi * x.x), std::cos(kTwoPi * x.x), 0.8});
  });
}
}  // namespace

TEST_CASE("llg_rhs basics") {
  Grid g = Grid::periodic(1, 4, 1.0);
  VecField m(g, {1, 0, 0}), H(g, {2, 0, 0});
  VecField f = llg_rhs(m, H, 0.7);
  for (const Vec3& v : f.v) CHECK(norm_inf(v) == 0.0);  // m parallel to H

  VecField f2 = llg_rhs(single_spin({1, 0, 0}), [&] {
        VecField h(Grid::periodic(1, 1, 1.0));
        h[0] = {0, 0, 1};
        return h;
      }(), 0.0);
  CHECK(f2[0].x == doctest::Approx(0.0));
  CHECK(f2[0].y == doctest::Approx(1.0));
  CHECK(f2[0].z == doctest::Approx(0.0));
}

TEST_CASE("llg_rhs is orthogonal to m and matches -m x h") {
  std::mt19937 rng(3);
  std::normal_distribution<double> n01;
  Grid g = Grid::periodic(1, 64, 1.0);
  VecField m(g), H(g);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = normalized({n01(rng), n01(rng), n01(rng)});
    H[i] = {n01(rng), n01(rng), n01(rng)};
  }
  const double alpha = 0.37;
  VecField f = llg_rhs(m, H, alpha);
  VecField h = compose_h(m, H, alpha);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(std::abs(dot(f[i], m[i])) < 1e-14 * (1.0 + norm(H[i])));
    CHECK(norm_inf(f[i] + cross(m[i], h[i])) < 1e-14 * (1.0 + norm(H[i])));
  }
}

TEST_CASE("compose_h with zero damping is H itself") {
  Grid g = Grid::periodic(1, 8, 1.0);
  VecField m(g, {0, 1, 0}), H(g, {0.4, -1.0, 2.0});
  VecField h = compose_h(m, H, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(norm_inf(h[i] - H[i]) == 0.0);
}

TEST_CASE("cayley rotation preserves the norm exactly") {
  std::mt19937 rng(5);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 200; ++i) {
    Vec3 m = normalized({n01(rng), n01(rng), n01(rng)});
    Vec3 c{n01(rng), n01(rng), n01(rng)};
    Vec3 x = cayley_rotate(m, c);
    CHECK(std::abs(norm(x) - 1.0) < 1e-14);
    // (I - [c]x) x == (I + [c]x) m
    CHECK(norm_inf((x - cross(c, x)) - (m + cross(c, m))) < 1e-13 * (1.0 + dot(c, c)));
  }
}

TEST_CASE("all steppers leave the state alone when H = 0") {
  Grid g = Grid::periodic(1, 16, 1.0);
  VecField m0 = smooth_initial(g);
  for (Method method : {Method::HeunP, Method::RK4P, Method::ImplicitMidpoint,
                        Method::MPE, Method::MPEA}) {
    IntegratorState s = integrate(m0, zero_field(), method, 0.01, 5, 0.5);
    for (std::size_t i = 0; i < m0.size(); ++i)
      CHECK(norm_inf(s.m[i] - m0[i]) < 1e-14);
  }
}

TEST_CASE("multistep steppers demand history") {
  IntegratorState s;
  s.m = single_spin({0, 0, 1});
  s.dt = 0.01;
  CHECK_THROWS_AS(step_mpe(s, zero_field(), 0.1), MissingHistory);
  CHECK_THROWS_AS(step_mpea(s, zero_field(), 0.1), MissingHistory);
}

TEST_CASE("norm preservation after steps with a real field") {
  Grid g = Grid::periodic(1, 32, 1.0);
  auto a = HalfPointCoefficient::sample(
      g, [](const Vec3& x) { return 1.0 + 0.5 * std::sin(kTwoPi * x.x); });
  FieldProvider H = exchange_field(a);
  const double dt = 2e-5;
  for (Method method : {Method::HeunP, Method::RK4P, Method::ImplicitMidpoint,
                        Method::MPE, Method::MPEA}) {
    IntegratorState s = integrate(smooth_initial(g), H, method, dt, 20, 0.05);
    CHECK(s.m.max_norm_deviation() < 1e-12);
  }
}

TEST_CASE("single-spin precession convergence orders") {
  // m' = -m x (0,0,1), m(0) = (1,0,0): rotation about z at unit rate.
  const double T = 1.0;
  auto err = [&](Method method, double dt) {
    const long n = std::lround(T / dt);
    IntegratorState s = integrate(single_spin({1, 0, 0}), constant_field({0, 0, 1}),
                                  method, dt, n, 0.0);
    const Vec3 exact{std::cos(T), std::sin(T), 0.0};
    return norm(s.m[0] - exact);
  };
  auto slope = [&](Method method) {
    const double e1 = err(method, 1e-2), e2 = err(method, 5e-3), e3 = err(method, 2.5e-3);
    return 0.5 * (std::log2(e1 / e2) + std::log2(e2 / e3));
  };
  CHECK(slope(Method::HeunP) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(slope(Method::RK4P) == doctest::Approx(4.0).epsilon(0.075));
  CHECK(slope(Method::MPE) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(slope(Method::MPEA) >= 1.8);
  CHECK(slope(Method::ImplicitMidpoint) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("implicit midpoint conserves exchange energy without damping") {
  Grid g = Grid::periodic(1, 32, 1.0);
  auto a = HalfPointCoefficient::sample(g, [](const Vec3&) { return 1.0; });
  FieldProvider H = exchange_field(a);
  auto energy = [&](const VecField& m) {
    double e = 0.0;
    const int n = g.nodes[0];
    for (int i = 0; i < n; ++i) {
      const Vec3 d = m[(i + 1) % n] - m[i];
      e += 0.5 * a.half[0][i] * dot(d, d) / (g.spacing[0] * g.spacing[0]) * g.spacing[0];
    }
    return e;
  };
  IntegratorState s;
  s.m = smooth_initial(g);
  s.dt = 1e-4;
  const double e0 = energy(s.m);
  for (int j = 0; j < 100; ++j) step_implicit_midpoint(s, H, 0.0);
  CHECK(std::abs(energy(s.m) - e0) < 1e-8 * std::max(1.0, e0));
}

TEST_CASE("implicit midpoint reports fixed-point divergence") {
  Grid g = Grid::periodic(1, 64, 1.0);
  auto a = HalfPointCoefficient::sample(g, [](const Vec3&) { return 1.0; });
  FieldProvider H = exchange_field(a);
  IntegratorState s;
  s.m = smooth_initial(g);
  s.dt = 1.0;  // far beyond the contraction regime
  CHECK_THROWS_AS(step_implicit_midpoint(s, H, 0.0, 1e-12, 20), FixedPointDivergence);
}

TEST_CASE("stability limit scales like dx^2 for HeunP on the homogenized problem") {
  const MatD AH = MatD::identity(1, 0.866);
  StabilityProbe probe;
  probe.initial = [](double dx) {
    return smooth_initial(Grid::periodic(1, std::lround(1.0 / dx), 1.0));
  };
  probe.provider = [&AH](const Grid&) -> FieldProvider {
    return [AH](const VecField& m, double, VecField& H) { div_grad_AH(m, AH, 2, H); };
  };
  StabilityTable t = estimate_stability_limit(
      Method::HeunP, probe, {1.0 / 25, 1.0 / 50, 1.0 / 100}, 0.01);
  CHECK(t.slope > 1.8);
  CHECK(t.slope < 2.2);
  for (const auto& r : t.rows) CHECK(!r.bracket_top);

  StabilityTable rk4 = estimate_stability_limit(Method::RK4P, probe, {1.0 / 50}, 0.01);
  StabilityTable mpe = estimate_stability_limit(Method::MPE, probe, {1.0 / 50}, 0.01);
  CHECK(rk4.rows[0].dt_max > mpe.rows[0].dt_max);
}

TEST_CASE("a zero field is stable at every probed dt (bracket-top sentinel)") {
  StabilityProbe probe;
  probe.initial = [](double dx) {
    return smooth_initial(Grid::periodic(1, std::lround(1.0 / dx), 1.0));
  };
  probe.provider = [](const Grid&) { return zero_field(); };
  StabilityTable t = estimate_stability_limit(Method::HeunP, probe, {1.0 / 50}, 0.01);
  CHECK(t.rows[0].bracket_top);
  CHECK(t.rows[0].dt_max == doctest::Approx(10.0 / (50.0 * 50.0)));
}

TEST_CASE("derived HeunP safe step is stable, a few times larger is not") {
  const double eps = 1.0 / 50, alpha = 1.2;
  Grid g = Grid::dirichlet_box(1, 4.0 * eps, eps / 15, 1);
  auto a = HalfPointCoefficient::sample(g, [&](const Vec3& x) {
    return 1.0 + 0.5 * std::sin(kTwoPi * x.x / eps);
  });
  FieldProvider H = exchange_field(a);
  VecField m0 = sample_field(g, [&](const Vec3& x) {
    return normalized(Vec3{0.3 + std::sin(kTwoPi * x.x), std::cos(kTwoPi * 3.0 * x.x), 1.0});
  });
  const double dt = heun_p_safe_dt(alpha, 1.5, 1, g.spacing[0]);
  CHECK(dt > 0.0);
  CHECK(probe_stable(Method::HeunP, m0, H, dt, alpha, 100));
  CHECK(!probe_stable(Method::HeunP, m0, H, 2.5 * dt, alpha, 100));
}
