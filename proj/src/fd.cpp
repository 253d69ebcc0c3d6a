#include "llhmm/fd.hpp"

#include <cmath>

namespace llhmm {

namespace {

// clang-format off
constexpr double d1_o2[] = {-0.5, 0.0, 0.5};
constexpr double d1_o4[] = {1.0/12, -2.0/3, 0.0, 2.0/3, -1.0/12};
constexpr double d1_o6[] = {-1.0/60, 3.0/20, -3.0/4, 0.0, 3.0/4, -3.0/20, 1.0/60};
constexpr double d1_o8[] = {1.0/280, -4.0/105, 1.0/5, -4.0/5, 0.0,
                            4.0/5, -1.0/5, 4.0/105, -1.0/280};
constexpr double d2_o2[] = {1.0, -2.0, 1.0};
constexpr double d2_o4[] = {-1.0/12, 4.0/3, -5.0/2, 4.0/3, -1.0/12};
constexpr double d2_o6[] = {1.0/90, -3.0/20, 3.0/2, -49.0/18, 3.0/2, -3.0/20, 1.0/90};
constexpr double d2_o8[] = {-1.0/560, 8.0/315, -1.0/5, 8.0/5, -205.0/72,
                            8.0/5, -1.0/5, 8.0/315, -1.0/560};
// clang-format on

struct AxisLayout {
  std::size_t stride;   // distance between neighbors along the axis
  std::size_t blocks;   // number of (outer, inner) line bundles
  int n;                // nodes along the axis
  std::size_t inner;    // elements with index < stride share a line bundle

  AxisLayout(const Grid& g, int axis) {
    if (axis < 0 || axis >= g.dim) throw AxisOutOfRange("axis out of range");
    n = g.nodes[axis];
    stride = 1;
    for (int a = 0; a < axis; ++a) stride *= static_cast<std::size_t>(g.nodes[a]);
    inner = stride;
    blocks = g.size() / (static_cast<std::size_t>(n) * stride);
  }
};

template <typename T>
void central_difference_impl(const Grid& g, const std::vector<T>& in, int axis,
                             int derivative, int order, std::vector<T>& out) {
  auto w = central_stencil(derivative, order);
  int radius = order / 2;
  AxisLayout ax(g, axis);
  if (order + 1 > ax.n) throw StencilWiderThanGrid("stencil wider than grid axis");
  double scale = 1.0;
  for (int d = 0; d < derivative; ++d) scale /= g.spacing[axis];

  bool periodic = g.boundary == Boundary::Periodic;
  for (std::size_t b = 0; b < ax.blocks; ++b) {
    for (std::size_t inner = 0; inner < ax.inner; ++inner) {
      std::size_t base = b * ax.n * ax.stride + inner;
      for (int i = 0; i < ax.n; ++i) {
        std::size_t at = base + static_cast<std::size_t>(i) * ax.stride;
        if (!periodic && (i < radius || i >= ax.n - radius)) {
          out[at] = T{};
          continue;
        }
        T acc{};
        for (int s = -radius; s <= radius; ++s) {
          int j = i + s;
          if (periodic) j = (j % ax.n + ax.n) % ax.n;
          acc += w[s + radius] * in[base + static_cast<std::size_t>(j) * ax.stride];
        }
        out[at] = scale * acc;
      }
    }
  }
}

}  // namespace

bool MatD::symmetric_positive_definite(double tol) const {
  double scale = std::max(max_abs(), 1e-300);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (std::abs(a[i][j] - a[j][i]) > tol * scale) return false;
  // leading principal minors
  if (a[0][0] <= 0.0) return false;
  if (dim >= 2) {
    if (a[0][0] * a[1][1] - a[0][1] * a[1][0] <= 0.0) return false;
  }
  if (dim >= 3) {
    double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                 a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                 a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if (det <= 0.0) return false;
  }
  return true;
}

std::span<const double> central_stencil(int derivative, int order) {
  if (derivative == 1) {
    switch (order) {
      case 2: return d1_o2;
      case 4: return d1_o4;
      case 6: return d1_o6;
      case 8: return d1_o8;
    }
  } else if (derivative == 2) {
    switch (order) {
      case 2: return d2_o2;
      case 4: return d2_o4;
      case 6: return d2_o6;
      case 8: return d2_o8;
    }
  }
  throw Error("unsupported derivative/order combination");
}

void central_difference(const ScalarField& f, int axis, int derivative, int order,
                        ScalarField& out) {
  out.grid = f.grid;
  out.v.resize(f.v.size());
  central_difference_impl(f.grid, f.v, axis, derivative, order, out.v);
}

ScalarField central_difference(const ScalarField& f, int axis, int derivative, int order) {
  ScalarField out;
  central_difference(f, axis, derivative, order, out);
  return out;
}

void central_difference(const VecField& f, int axis, int derivative, int order,
                        VecField& out) {
  out.grid = f.grid;
  out.v.resize(f.v.size());
  central_difference_impl(f.grid, f.v, axis, derivative, order, out.v);
}

VecField central_difference(const VecField& f, int axis, int derivative, int order) {
  VecField out;
  central_difference(f, axis, derivative, order, out);
  return out;
}

HalfPointCoefficient HalfPointCoefficient::sample(
    const Grid& g, const std::function<double(const Vec3&)>& a) {
  HalfPointCoefficient hp;
  hp.grid = g;
  for (int ax = 0; ax < g.dim; ++ax) {
    hp.half[ax].resize(g.size());
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      Vec3 p = g.position(idx);
      p[ax] += 0.5 * g.spacing[ax];
      double val = a(p);
      if (!(val > 0.0))
        throw NonPositiveCoefficient("coefficient not strictly positive at a half point");
      hp.half[ax][idx] = val;
    }
  }
  return hp;
}

void div_a_grad(const HalfPointCoefficient& a, const VecField& m, VecField& out) {
  const Grid& g = m.grid;
  if (!a.grid.same_shape(g)) throw ShapeMismatch("coefficient/field shape mismatch");
  out.grid = g;
  out.v.assign(g.size(), Vec3{});
  bool periodic = g.boundary == Boundary::Periodic;

  for (int axc = 0; axc < g.dim; ++axc) {
    AxisLayout ax(g, axc);
    double inv_h2 = 1.0 / (g.spacing[axc] * g.spacing[axc]);
    const std::vector<double>& ah = a.half[axc];
    for (std::size_t b = 0; b < ax.blocks; ++b) {
      for (std::size_t inner = 0; inner < ax.inner; ++inner) {
        std::size_t base = b * ax.n * ax.stride + inner;
        int lo = periodic ? 0 : 1;
        int hi = periodic ? ax.n : ax.n - 1;
        for (int i = lo; i < hi; ++i) {
          std::size_t at = base + static_cast<std::size_t>(i) * ax.stride;
          int ie = i + 1 == ax.n ? 0 : i + 1;
          int iw = i == 0 ? ax.n - 1 : i - 1;
          std::size_t east = base + static_cast<std::size_t>(ie) * ax.stride;
          std::size_t west = base + static_cast<std::size_t>(iw) * ax.stride;
          double aE = ah[at];
          double aW = ah[west];
          const Vec3& mc = m.v[at];
          const Vec3& me = m.v[east];
          const Vec3& mw = m.v[west];
          out.v[at] += inv_h2 * Vec3{aE * (me.x - mc.x) - aW * (mc.x - mw.x),
                                     aE * (me.y - mc.y) - aW * (mc.y - mw.y),
                                     aE * (me.z - mc.z) - aW * (mc.z - mw.z)};
        }
      }
    }
  }

  // Dirichlet: zero out anything not surrounded by a full one-ring.
  if (!periodic) {
    for (int axc = 0; axc < g.dim; ++axc) {
      AxisLayout ax(g, axc);
      for (std::size_t b = 0; b < ax.blocks; ++b)
        for (std::size_t inner = 0; inner < ax.inner; ++inner) {
          std::size_t base = b * ax.n * ax.stride + inner;
          out.v[base] = Vec3{};
          out.v[base + static_cast<std::size_t>(ax.n - 1) * ax.stride] = Vec3{};
        }
    }
  }
}

VecField div_a_grad(const HalfPointCoefficient& a, const VecField& m) {
  VecField out;
  div_a_grad(a, m, out);
  return out;
}

void div_grad_AH(const VecField& m, const MatD& AH, int order, VecField& out) {
  if (AH.dim != m.grid.dim) throw ShapeMismatch("matrix dimension/grid dimension mismatch");
  if (!AH.symmetric_positive_definite()) throw NonSPDMatrix("AH not symmetric positive definite");
  out.grid = m.grid;
  out.v.assign(m.size(), Vec3{});

  VecField tmp, tmp2;
  for (int r = 0; r < AH.dim; ++r) {
    central_difference(m, r, 2, order, tmp);
    double w = AH(r, r);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += w * tmp.v[i];
  }
  for (int s = 0; s < AH.dim; ++s) {
    bool need = false;
    for (int r = 0; r < AH.dim; ++r) need |= (r != s && AH(r, s) != 0.0);
    if (!need) continue;
    central_difference(m, s, 1, order, tmp);
    for (int r = 0; r < AH.dim; ++r) {
      if (r == s || AH(r, s) == 0.0) continue;
      central_difference(tmp, r, 1, order, tmp2);
      double w = AH(r, s);
      for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += w * tmp2.v[i];
    }
  }
}

VecField div_grad_AH(const VecField& m, const MatD& AH, int order) {
  VecField out;
  div_grad_AH(m, AH, order, out);
  return out;
}

}  // namespace llhmm
