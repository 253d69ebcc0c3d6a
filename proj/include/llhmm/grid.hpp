#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "llhmm/errors.hpp"
#include "llhmm/vec.hpp"

namespace llhmm {

enum class Boundary { Periodic, DirichletFrozen };

// Structured uniform grid, d in {1,2,3}. For periodic grids there are
// nodes[a] points per axis covering [origin, origin + nodes*spacing); for
// DirichletFrozen grids the nodes include the frozen boundary ring of width
// frozen_width whose values are never updated by any time stepper.
struct Grid {
  int dim = 1;
  std::array<int, 3> nodes{1, 1, 1};
  std::array<double, 3> spacing{0.0, 0.0, 0.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  Boundary boundary = Boundary::Periodic;
  int frozen_width = 0;

  static Grid periodic(int dim, int n_per_axis, double extent_per_axis,
                       double origin_all = 0.0) {
    Grid g;
    g.dim = dim;
    for (int a = 0; a < dim; ++a) {
      g.nodes[a] = n_per_axis;
      g.spacing[a] = extent_per_axis / n_per_axis;
      g.origin[a] = origin_all;
    }
    return g;
  }

  // Dirichlet box [center - half, center + half]^dim with nodes at both ends.
  static Grid dirichlet_box(int dim, double half_width, double spacing_,
                            int frozen_width_, double center = 0.0) {
    Grid g;
    g.dim = dim;
    g.boundary = Boundary::DirichletFrozen;
    g.frozen_width = frozen_width_;
    int half_n = static_cast<int>(half_width / spacing_ + 0.5);
    for (int a = 0; a < dim; ++a) {
      g.nodes[a] = 2 * half_n + 1;
      g.spacing[a] = spacing_;
      g.origin[a] = center - half_n * spacing_;
    }
    return g;
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(nodes[a]);
    return s;
  }

  double extent(int axis) const {
    return boundary == Boundary::Periodic ? spacing[axis] * nodes[axis]
                                          : spacing[axis] * (nodes[axis] - 1);
  }

  double coord(int axis, int i) const { return origin[axis] + i * spacing[axis]; }

  std::size_t index(int i, int j = 0, int k = 0) const {
    return (static_cast<std::size_t>(k) * nodes[1] + j) * nodes[0] + i;
  }

  Vec3 position(std::size_t flat) const {
    int i = static_cast<int>(flat % nodes[0]);
    int j = static_cast<int>((flat / nodes[0]) % nodes[1]);
    int k = static_cast<int>(flat / (static_cast<std::size_t>(nodes[0]) * nodes[1]));
    return {coord(0, i), dim > 1 ? coord(1, j) : 0.0, dim > 2 ? coord(2, k) : 0.0};
  }

  bool same_shape(const Grid& o) const {
    return dim == o.dim && nodes == o.nodes;
  }
};

struct ScalarField {
  Grid grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  std::size_t size() const { return v.size(); }
};

// Lattice of 3-vectors; MagnetizationField when the values are unit vectors.
struct VecField {
  Grid grid;
  std::vector<Vec3> v;

  VecField() = default;
  explicit VecField(const Grid& g, Vec3 fill = {}) : grid(g), v(g.size(), fill) {}
  Vec3& operator[](std::size_t i) { return v[i]; }
  const Vec3& operator[](std::size_t i) const { return v[i]; }
  std::size_t size() const { return v.size(); }

  double max_norm_deviation() const {
    double dev = 0.0;
    for (const auto& m : v) dev = std::max(dev, std::abs(norm(m) - 1.0));
    return dev;
  }

  void project_to_sphere() {
    for (auto& m : v) {
      double n = norm(m);
      if (n < 1e-8) throw ZeroNormBeforeProjection("vanishing norm before projection");
      m = {m.x / n, m.y / n, m.z / n};
    }
  }
};

template <typename F>
VecField sample_field(const Grid& g, F&& f) {
  VecField out(g);
  for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] = f(g.position(idx));
  return out;
}

template <typename F>
ScalarField sample_scalar(const Grid& g, F&& f) {
  ScalarField out(g);
  for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] = f(g.position(idx));
  return out;
}

}  // namespace llhmm
