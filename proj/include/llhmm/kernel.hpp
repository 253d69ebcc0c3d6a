#pragma once

#include <string>
#include <vector>

#include "llhmm/grid.hpp"

namespace llhmm {

// Smoothing kernel from the space K^{p,q}: p vanishing moments, C^q compact
// support. Symmetric kernels live on [-1,1] and are built as
// (1-x^2)^{q+1} * sum_i c_i T_{2i}(x); one-sided kernels live on [0,1] as
// (x(1-x))^{q+1} * sum_i c_i T_i(2x-1).
struct Kernel {
  int p = 0;
  int q = 0;
  bool one_sided = false;
  std::vector<double> coeffs;              // Chebyshev coefficients c_i
  std::vector<double> moment_certificate;  // moments 0..p at construction

  double operator()(double x) const;  // zero outside the support

  // K_mu(x) := (1/mu) K(x/mu); support scales to [-mu,mu] or [0,mu].
  double scaled(double mu, double x) const { return operator()(x / mu) / mu; }

  // Plain-text round trip: "p q one_sided n c_0 ... c_{n-1}".
  std::string dump() const;
  static Kernel load(const std::string& text);
};

// Solves the moment system for the Chebyshev coefficients. p, q <= 12.
// Throws IllConditionedSystem if the moment matrix condition exceeds 1e12.
Kernel construct_kernel(int p, int q, bool one_sided);

// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Kernel-weighted space-time average of a lattice trajectory:
//   integral_0^eta integral K_mu(x) K0_eta(t) f(x,t) dx dt
// with tensor-product spatial kernel, trapezoidal quadrature in every
// dimension and in time. Frames are equispaced over [0, eta] and share a
// grid centered at the origin that must cover [-mu, mu]^d.
Vec3 space_time_average(const std::vector<VecField>& frames, const Kernel& spatial,
                        const Kernel& temporal, double mu, double eta);

// Trapezoid-weighted spatial kernel average of a single lattice (the spatial
// factor of space_time_average, reused by the fused micro path).
Vec3 spatial_average(const VecField& f, const Kernel& spatial, double mu);

}  // namespace llhmm
