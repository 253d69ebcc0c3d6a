#pragma once

#include <functional>
#include <span>

#include "llhmm/grid.hpp"

namespace llhmm {

// Small dense d x d matrix, d <= 3. Used for the homogenized coefficient A^H.
struct MatD {
  int dim = 1;
  std::array<std::array<double, 3>, 3> a{};

  static MatD identity(int dim, double scale = 1.0) {
    MatD m;
    m.dim = dim;
    for (int i = 0; i < dim; ++i) m.a[i][i] = scale;
    return m;
  }
  static MatD diag(double p, double q) {
    MatD m;
    m.dim = 2;
    m.a[0][0] = p;
    m.a[1][1] = q;
    return m;
  }

  double operator()(int i, int j) const { return a[i][j]; }
  double& operator()(int i, int j) { return a[i][j]; }

  double max_abs() const {
    double r = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) r = std::max(r, std::abs(a[i][j]));
    return r;
  }

  bool symmetric_positive_definite(double tol = 1e-10) const;
};

// Centered finite-difference stencil weights, unscaled (multiply by
// spacing^-derivative). derivative in {1,2}, order in {2,4,6,8}; radius is
// order/2, stencil length 2*radius + 1.
std::span<const double> central_stencil(int derivative, int order);

// Central difference of the given derivative and order along one axis.
// Periodic grids wrap; DirichletFrozen grids get zeros wherever the stencil
// would reach outside the stored data.
void central_difference(const ScalarField& f, int axis, int derivative, int order,
                        ScalarField& out);
ScalarField central_difference(const ScalarField& f, int axis, int derivative, int order);
void central_difference(const VecField& f, int axis, int derivative, int order,
                        VecField& out);
VecField central_difference(const VecField& f, int axis, int derivative, int order);

// Coefficient samples at the half points x_i + dx/2 e_axis, one array per
// axis, evaluated analytically from the coefficient function.
struct HalfPointCoefficient {
  Grid grid;
  std::array<std::vector<double>, 3> half;

  static HalfPointCoefficient sample(const Grid& g,
                                     const std::function<double(const Vec3&)>& a);
};

// Conservative second-order approximation of div(a grad m):
// per axis (a_{i+1/2}(m_{i+1}-m_i) - a_{i-1/2}(m_i-m_{i-1}))/dx^2.
void div_a_grad(const HalfPointCoefficient& a, const VecField& m, VecField& out);
VecField div_a_grad(const HalfPointCoefficient& a, const VecField& m);

// sum_{r,s} AH_rs d^2 m / dx_r dx_s with central stencils of the requested
// order; mixed terms via composed first-derivative stencils of matched order.
void div_grad_AH(const VecField& m, const MatD& AH, int order, VecField& out);
VecField div_grad_AH(const VecField& m, const MatD& AH, int order);

}  // namespace llhmm
