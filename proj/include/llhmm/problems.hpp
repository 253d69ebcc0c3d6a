#pragma once

#include <functional>
#include <string>

#include "llhmm/grid.hpp"

namespace llhmm {

// Chain rule for Q = F/|F| and its first two derivatives, given the raw
// vector F and its partials. Shared by the analytic presets and the
// stencil-interpolant derivative path.
Vec3 normalized_value(const Vec3& F);
Vec3 normalized_d1(const Vec3& F, const Vec3& Fr);
Vec3 normalized_d2(const Vec3& F, const Vec3& Fr, const Vec3& Fs, const Vec3& Frs);

// Smooth macro initial data with closed-form derivatives: the raw
// (unnormalized) field F and partials, plus the normalized magnetization
// M = F/|F| with its derivatives.
struct AnalyticField {
  int dim = 1;
  std::function<Vec3(const Vec3&)> raw;
  std::function<Vec3(const Vec3&, int)> raw_d1;
  std::function<Vec3(const Vec3&, int, int)> raw_d2;

  Vec3 value(const Vec3& x) const { return normalized_value(raw(x)); }
  Vec3 d1(const Vec3& x, int r) const { return normalized_d1(raw(x), raw_d1(x, r)); }
  Vec3 d2(const Vec3& x, int r, int s) const {
    return normalized_d2(raw(x), raw_d1(x, r), raw_d1(x, s), raw_d2(x, r, s));
  }

  VecField sample(const Grid& g) const {
    return sample_field(g, [this](const Vec3& x) { return value(x); });
  }
};

// Named initial-data presets: EX1 (1D) and EX2 (2D, also used for EX3 runs).
AnalyticField initial_data(const std::string& name);

}  // namespace llhmm
