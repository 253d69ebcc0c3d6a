#include "llhmm/problems.hpp"

#include <array>
#include <cmath>

#include "llhmm/errors.hpp"

namespace llhmm {

Vec3 normalized_value(const Vec3& F) {
  double n = norm(F);
  if (n < 1e-14) throw ZeroNormBeforeProjection("vanishing norm in initial data");
  return F * (1.0 / n);
}

Vec3 normalized_d1(const Vec3& F, const Vec3& Fr) {
  double n = norm(F);
  double n3 = n * n * n;
  return Fr * (1.0 / n) - F * (dot(F, Fr) / n3);
}

Vec3 normalized_d2(const Vec3& F, const Vec3& Fr, const Vec3& Fs, const Vec3& Frs) {
  double n = norm(F);
  double n3 = n * n * n;
  double n5 = n3 * n * n;
  double fr = dot(F, Fr), fs = dot(F, Fs);
  return Frs * (1.0 / n) - Fr * (fs / n3) - Fs * (fr / n3) -
         F * ((dot(Fs, Fr) + dot(F, Frs)) / n3) + F * (3.0 * fr * fs / n5);
}

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

// 1D component: b + exp(-c cos(2 pi (x - s)))
struct Bump1 {
  double b, c, s;
  double g(double x) const { return std::exp(-c * std::cos(two_pi * (x - s))); }
  double f(double x) const { return b + g(x); }
  double d1(double x) const { return g(x) * c * two_pi * std::sin(two_pi * (x - s)); }
  double d2(double x) const {
    double sn = std::sin(two_pi * (x - s)), cs = std::cos(two_pi * (x - s));
    double a1 = c * two_pi * sn;
    return g(x) * (a1 * a1 + c * two_pi * two_pi * cs);
  }
};

// 2D component: b + exp(-c (cos(2 pi (x1 - s)) + cos(2 pi (x2 - t))))
struct Bump2 {
  double b, c, s, t;
  double sh(int r) const { return r == 0 ? s : t; }
  double g(const Vec3& x) const {
    return std::exp(-c * (std::cos(two_pi * (x[0] - s)) + std::cos(two_pi * (x[1] - t))));
  }
  double f(const Vec3& x) const { return b + g(x); }
  double d1(const Vec3& x, int r) const {
    return g(x) * c * two_pi * std::sin(two_pi * (x[r] - sh(r)));
  }
  double d2(const Vec3& x, int r, int q) const {
    double ar = c * two_pi * std::sin(two_pi * (x[r] - sh(r)));
    double aq = c * two_pi * std::sin(two_pi * (x[q] - sh(q)));
    double v = ar * aq;
    if (r == q) v += c * two_pi * two_pi * std::cos(two_pi * (x[r] - sh(r)));
    return g(x) * v;
  }
};

AnalyticField make_ex1() {
  std::array<Bump1, 3> comp = {Bump1{0.5, 0.1, 0.32}, Bump1{0.5, 0.2, 0.0},
                               Bump1{0.5, 0.1, 0.75}};
  AnalyticField F;
  F.dim = 1;
  F.raw = [comp](const Vec3& x) {
    return Vec3{comp[0].f(x[0]), comp[1].f(x[0]), comp[2].f(x[0])};
  };
  F.raw_d1 = [comp](const Vec3& x, int r) {
    if (r != 0) return Vec3{};
    return Vec3{comp[0].d1(x[0]), comp[1].d1(x[0]), comp[2].d1(x[0])};
  };
  F.raw_d2 = [comp](const Vec3& x, int r, int s) {
    if (r != 0 || s != 0) return Vec3{};
    return Vec3{comp[0].d2(x[0]), comp[1].d2(x[0]), comp[2].d2(x[0])};
  };
  return F;
}

AnalyticField make_ex2() {
  std::array<Bump2, 3> comp = {Bump2{0.6, 0.3, 0.25, 0.12}, Bump2{0.5, 0.4, 0.0, 0.4},
                               Bump2{0.4, 0.2, 0.81, 0.73}};
  AnalyticField F;
  F.dim = 2;
  F.raw = [comp](const Vec3& x) {
    return Vec3{comp[0].f(x), comp[1].f(x), comp[2].f(x)};
  };
  F.raw_d1 = [comp](const Vec3& x, int r) {
    if (r > 1) return Vec3{};
    return Vec3{comp[0].d1(x, r), comp[1].d1(x, r), comp[2].d1(x, r)};
  };
  F.raw_d2 = [comp](const Vec3& x, int r, int s) {
    if (r > 1 || s > 1) return Vec3{};
    return Vec3{comp[0].d2(x, r, s), comp[1].d2(x, r, s), comp[2].d2(x, r, s)};
  };
  return F;
}

}  // namespace

AnalyticField initial_data(const std::string& name) {
  if (name == "EX1") return make_ex1();
  if (name == "EX2" || name == "EX3") return make_ex2();
  throw UnknownIdentifier("initial data preset: " + name);
}

}  // namespace llhmm
