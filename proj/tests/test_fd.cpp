#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llhmm/fd.hpp"
#include "llhmm/grid.hpp"

using namespace llhmm;

namespace {
constexpr double kTwoPi = 2.0 * M_PI;

double max_err(const VecField& got, const VecField& want) {
  double e = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) e = std::max(e, norm_inf(got[i] - want[i]));
  return e;
}
}  // namespace

TEST_CASE("grid basics") {
  Grid g = Grid::periodic(2, 8, 1.0);
  CHECK(g.size() == 64);
  CHECK(g.spacing[0] == doctest::Approx(0.125));
  CHECK(g.extent(0) == doctest::Approx(1.0));
  CHECK(g.index(3, 2) == 2 * 8 + 3);
  Vec3 p = g.position(g.index(3, 2));
  CHECK(p.x == doctest::Approx(0.375));
  CHECK(p.y == doctest::Approx(0.25));

  Grid d = Grid::dirichlet_box(1, 0.5, 0.1, 1);
  CHECK(d.nodes[0] == 11);
  CHECK(d.coord(0, 0) == doctest::Approx(-0.5));
  CHECK(d.extent(0) == doctest::Approx(1.0));
}

TEST_CASE("first derivative exact on linears away from Dirichlet ring") {
  Grid g = Grid::dirichlet_box(1, 1.0, 0.05, 1);
  VecField m = sample_field(g, [](const Vec3& x) { return Vec3{3.0 * x.x, 0, 0}; });
  VecField d = central_difference(m, 0, 1, 2);
  for (int i = 1; i < g.nodes[0] - 1; ++i)
    CHECK(d[i].x == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(d[0].x == 0.0);  // frozen ring excluded
}

TEST_CASE("second derivative exact on quadratics") {
  Grid g = Grid::dirichlet_box(1, 1.0, 0.1, 1);
  ScalarField f = sample_scalar(g, [](const Vec3& x) { return x.x * x.x; });
  ScalarField d = central_difference(f, 0, 2, 2);
  for (int i = 1; i < g.nodes[0] - 1; ++i) CHECK(d[i] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("stencil exactness on monomials up to order + derivative - 1") {
  for (int der : {1, 2})
    for (int order : {2, 4, 6, 8}) {
      Grid g = Grid::dirichlet_box(1, 1.0, 1.0 / 16, order / 2);
      for (int deg = 0; deg <= order + der - 1; ++deg) {
        ScalarField f = sample_scalar(g, [&](const Vec3& x) { return std::pow(x.x, deg); });
        ScalarField d = central_difference(f, 0, der, order);
        for (int i = order / 2; i < g.nodes[0] - order / 2; ++i) {
          const double x = g.coord(0, i);
          double want = 1.0;
          for (int k = 0; k < der; ++k) want *= deg - k;
          want = deg >= der ? want * std::pow(x, deg - der) : 0.0;
          CHECK(d[i] == doctest::Approx(want).epsilon(1e-9).scale(1.0));
        }
      }
    }
}

TEST_CASE("order-4 second derivative: halving cuts error by about 16") {
  auto err_at = [](int n) {
    Grid g = Grid::periodic(1, n, 1.0);
    ScalarField f = sample_scalar(g, [](const Vec3& x) { return std::sin(kTwoPi * x.x); });
    ScalarField d = central_difference(f, 0, 2, 4);
    double e = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = g.position(i).x;
      e = std::max(e, std::abs(d[i] + kTwoPi * kTwoPi * std::sin(kTwoPi * x)));
    }
    return e;
  };
  const double ratio = err_at(32) / err_at(64);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("central_difference argument validation") {
  Grid g = Grid::periodic(1, 8, 1.0);
  ScalarField f(g);
  CHECK_THROWS_AS(central_difference(f, 1, 1, 2), AxisOutOfRange);
  CHECK_THROWS_AS(central_difference(f, 0, 1, 8), StencilWiderThanGrid);
}

TEST_CASE("div_a_grad: constant a, linear m gives zero") {
  Grid g = Grid::dirichlet_box(2, 0.5, 0.05, 1);
  auto a = HalfPointCoefficient::sample(g, [](const Vec3&) { return 1.0; });
  VecField m = sample_field(g, [](const Vec3& x) {
    return Vec3{x.x + 2.0 * x.y, -x.x, 0.5};
  });
  VecField out = div_a_grad(a, m);
  for (const Vec3& v : out.v) CHECK(norm_inf(v) < 1e-11);
}

TEST_CASE("div_a_grad: constant a converges to the Laplacian at order 2") {
  auto err_at = [](int n) {
    Grid g = Grid::periodic(1, n, 1.0);
    auto a = HalfPointCoefficient::sample(g, [](const Vec3&) { return 1.0; });
    VecField m = sample_field(g, [](const Vec3& x) {
      return Vec3{0, 0, std::sin(kTwoPi * x.x)};
    });
    VecField want = sample_field(g, [](const Vec3& x) {
      return Vec3{0, 0, -kTwoPi * kTwoPi * std::sin(kTwoPi * x.x)};
    });
    return max_err(div_a_grad(a, m), want);
  };
  CHECK(err_at(32) / err_at(64) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("div_a_grad: variable a against analytic expansion") {
  // d/dx(a m') with a = 2 + cos(2 pi x), m_z = sin(2 pi x).
  auto err_at = [](int n) {
    Grid g = Grid::periodic(1, n, 1.0);
    auto a = HalfPointCoefficient::sample(
        g, [](const Vec3& x) { return 2.0 + std::cos(kTwoPi * x.x); });
    VecField m = sample_field(g, [](const Vec3& x) {
      return Vec3{0, 0, std::sin(kTwoPi * x.x)};
    });
    VecField want = sample_field(g, [](const Vec3& x) {
      const double s = std::sin(kTwoPi * x.x), c = std::cos(kTwoPi * x.x);
      return Vec3{0, 0, kTwoPi * kTwoPi * (-s * c - (2.0 + c) * s)};
    });
    return max_err(div_a_grad(a, m), want);
  };
  CHECK(err_at(64) / err_at(128) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("div_a_grad conserves the lattice sum on periodic grids") {
  Grid g = Grid::periodic(2, 24, 1.0);
  auto a = HalfPointCoefficient::sample(g, [](const Vec3& x) {
    return 1.5 + std::sin(kTwoPi * x.x) * std::cos(kTwoPi * x.y);
  });
  VecField m = sample_field(g, [](const Vec3& x) {
    return normalized(Vec3{std::cos(kTwoPi * x.x), std::sin(kTwoPi * x.y), 1.0});
  });
  VecField out = div_a_grad(a, m);
  Vec3 sum{};
  for (const Vec3& v : out.v) sum += v;
  CHECK(norm_inf(sum * (g.spacing[0] * g.spacing[1])) < 1e-11);
}

TEST_CASE("div_a_grad rejects non-positive coefficients") {
  Grid g = Grid::periodic(1, 16, 1.0);
  CHECK_THROWS_AS(
      HalfPointCoefficient::sample(g, [](const Vec3& x) { return std::sin(kTwoPi * x.x); }),
      NonPositiveCoefficient);
}

TEST_CASE("div_grad_AH with identity equals the discrete Laplacian bitwise") {
  Grid g = Grid::periodic(2, 16, 1.0);
  VecField m = sample_field(g, [](const Vec3& x) {
    return normalized(Vec3{std::sin(kTwoPi * x.x), std::cos(kTwoPi * x.y), 1.0});
  });
  VecField lhs = div_grad_AH(m, MatD::identity(2), 2);
  VecField lap(g);
  for (int ax = 0; ax < 2; ++ax) {
    VecField d = central_difference(m, ax, 2, 2);
    for (std::size_t i = 0; i < lap.size(); ++i) lap[i] += d[i];
  }
  for (std::size_t i = 0; i < lap.size(); ++i) CHECK(norm_inf(lhs[i] - lap[i]) == 0.0);
}

TEST_CASE("div_grad_AH diagonal case converges at order 2") {
  const MatD AH = MatD::diag(0.7, 1.3);
  auto err_at = [&](int n) {
    Grid g = Grid::periodic(2, n, 1.0);
    VecField m = sample_field(g, [](const Vec3& x) {
      return Vec3{0, 0, std::sin(kTwoPi * x.x) * std::sin(kTwoPi * x.y)};
    });
    VecField want = sample_field(g, [&](const Vec3& x) {
      return Vec3{0, 0, -kTwoPi * kTwoPi * (0.7 + 1.3) * std::sin(kTwoPi * x.x) *
                            std::sin(kTwoPi * x.y)};
    });
    return max_err(div_grad_AH(m, AH, 2), want);
  };
  CHECK(err_at(24) / err_at(48) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("div_grad_AH mixed-derivative contribution") {
  MatD AH;
  AH.dim = 2;
  AH(0, 0) = 0.617;
  AH(1, 1) = 0.715;
  AH(0, 1) = AH(1, 0) = 0.026;
  const double target = -kTwoPi * kTwoPi * (0.617 + 0.715 + 2.0 * 0.026);
  auto err_at = [&](int n) {
    Grid g = Grid::periodic(2, n, 1.0);
    VecField m = sample_field(g, [](const Vec3& x) {
      return Vec3{0, 0, std::sin(kTwoPi * (x.x + x.y))};
    });
    VecField want = sample_field(g, [&](const Vec3& x) {
      return Vec3{0, 0, target * std::sin(kTwoPi * (x.x + x.y))};
    });
    return max_err(div_grad_AH(m, AH, 4), want);
  };
  CHECK(err_at(24) > err_at(48));
  CHECK(err_at(48) < 1e-3);
}

TEST_CASE("div_grad_AH is linear in AH") {
  Grid g = Grid::periodic(2, 16, 1.0);
  VecField m = sample_field(g, [](const Vec3& x) {
    return normalized(Vec3{std::sin(kTwoPi * x.x), std::cos(kTwoPi * (x.x - x.y)), 1.0});
  });
  MatD A = MatD::diag(0.9, 0.4);
  A(0, 1) = A(1, 0) = 0.1;
  MatD B = MatD::diag(0.3, 0.8);
  MatD C;
  C.dim = 2;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) C(i, j) = A(i, j) + B(i, j);
  VecField fa = div_grad_AH(m, A, 2), fb = div_grad_AH(m, B, 2), fc = div_grad_AH(m, C, 2);
  for (std::size_t i = 0; i < m.size(); ++i)
    CHECK(norm_inf(fc[i] - (fa[i] + fb[i])) < 1e-12);
}

TEST_CASE("div_grad_AH rejects non-SPD matrices") {
  Grid g = Grid::periodic(2, 16, 1.0);
  VecField m(g, {0, 0, 1});
  MatD bad = MatD::diag(1.0, -1.0);
  CHECK_THROWS_AS(div_grad_AH(m, bad, 2), NonSPDMatrix);
}

TEST_CASE("projection enforces unit norm and rejects vanishing vectors") {
  Grid g = Grid::periodic(1, 8, 1.0);
  VecField m(g, {3, 4, 0});
  m.project_to_sphere();
  CHECK(m.max_norm_deviation() < 1e-15);
  VecField z(g, {0, 0, 0});
  CHECK_THROWS_AS(z.project_to_sphere(), ZeroNormBeforeProjection);
}
