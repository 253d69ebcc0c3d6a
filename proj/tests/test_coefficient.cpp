#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "llhmm/coefficient.hpp"
#include "llhmm/errors.hpp"

using namespace llhmm;

TEST_CASE("expression parser basics") {
  Coefficient c = Coefficient::expression("1", 0.1, 1);
  CHECK(c({0.3, 0, 0}) == doctest::Approx(1.0));
  CHECK(c.a_min() == doctest::Approx(1.0));
  CHECK(c.a_max() == doctest::Approx(1.0));

  Coefficient d = Coefficient::expression("2 + -0.5*cos(2*pi*x1)", 0.1, 1);
  CHECK(d({0.0, 0, 0}) == doctest::Approx(1.5));
  CHECK(d({0.5, 0, 0}) == doctest::Approx(2.5));
}

TEST_CASE("syntax errors carry a position") {
  try {
    Coefficient::expression("sin(", 0.1, 1);
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.position == 4);
  }
  CHECK_THROWS_AS(Coefficient::expression("foo(x1)", 0.1, 1), UnknownIdentifier);
  CHECK_THROWS_AS(Coefficient::expression("1 + 2 x1", 0.1, 1), SyntaxError);
}

TEST_CASE("expression matches EX1 preset at random points") {
  const double eps = 1.0 / 50;
  Coefficient preset = Coefficient::preset("EX1", eps);
  Coefficient parsed = Coefficient::expression("1 + 0.5*sin(2*pi*x1/eps)", eps, 1);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    Vec3 x{u(rng), 0, 0};
    CHECK(parsed(x) == doctest::Approx(preset(x)).epsilon(1e-14));
  }
}

TEST_CASE("every preset agrees with its expression twin") {
  const double eps = 1.0 / 64;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const std::string& name : Coefficient::preset_names()) {
    Coefficient preset = Coefficient::preset(name, eps);
    Coefficient parsed =
        Coefficient::expression(Coefficient::preset_expression_text(name), eps, preset.dim());
    for (int i = 0; i < 1000; ++i) {
      Vec3 x{u(rng), u(rng), 0};
      CHECK(std::abs(parsed(x) - preset(x)) <= 1e-14 * std::max(1.0, std::abs(preset(x))));
    }
  }
}

TEST_CASE("preset bounds are sensible") {
  Coefficient ex1 = Coefficient::preset("EX1", 1.0 / 100);
  CHECK(ex1.a_min() == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(ex1.a_max() == doctest::Approx(1.5).epsilon(1e-4));
  CHECK(ex1.cell_periodic());

  Coefficient ex3 = Coefficient::preset("EX3", 1.0 / 100);
  CHECK(ex3.dim() == 2);
  CHECK(ex3.a_min() == doctest::Approx(0.36).epsilon(1e-2));
  CHECK(ex3.a_max() == doctest::Approx(2.56).epsilon(1e-2));

  Coefficient loc = Coefficient::preset("LOC2D", 1.0 / 100);
  CHECK(loc.a_min() > 0.0);
  CHECK(loc.a_max() > loc.a_min());
  CHECK(!loc.cell_periodic());
}

TEST_CASE("non-positive coefficients are rejected") {
  CHECK_THROWS_AS(Coefficient::expression("sin(2*pi*x1)", 0.1, 1), NonPositiveCoefficient);
  CHECK_THROWS_AS(Coefficient::expression("0", 0.1, 1), NonPositiveCoefficient);
}

TEST_CASE("unknown preset name") {
  CHECK_THROWS_AS(Coefficient::preset("EX9", 0.1), UnknownIdentifier);
}

TEST_CASE("cell view freezes the fast variable correctly") {
  const double eps = 1.0 / 40;
  Coefficient c = Coefficient::preset("EX1", eps);
  for (double y : {0.0, 0.25, 0.37, 0.9})
    CHECK(c.cell({y, 0, 0}) == doctest::Approx(1.0 + 0.5 * std::sin(2.0 * M_PI * y)));
}
