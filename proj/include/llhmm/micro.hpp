#pragma once

#include <vector>

#include "llhmm/coefficient.hpp"
#include "llhmm/fd.hpp"
#include "llhmm/grid.hpp"
#include "llhmm/kernel.hpp"
#include "llhmm/problems.hpp"

namespace llhmm {

// Parameters of a single micro problem on [-mu', mu']^d x [0, eta].
struct MicroSetup {
  double mu = 0.0;        // averaging half-width
  double mu_prime = 0.0;  // computational half-width, >= mu
  double eta = 0.0;       // averaging horizon
  double alpha_micro = 1.2;
  int points_per_eps = 15;  // K: micro nodes per eps
  int interp_order = 4;     // 2k, even, in {2, 4}
  Kernel spatial = construct_kernel(3, 7, false);
  Kernel temporal = construct_kernel(3, 7, true);
  double dt_factor = 0.0;  // c in dt = c dx^2; 0 selects the HeunP-safe bound

  double dx(double eps) const { return eps / points_per_eps; }
  // The stability check needs the coefficient bound and dimension.
  void validate(double a_max, int dim) const;  // throws ConfigError
};

struct MicroResult {
  Vec3 h_avg;
  double norm_drift = 0.0;  // max norm deviation seen over the solve
  long steps = 0;
};

// Tensor-product Lagrange interpolant P of a (2k+1)^d stencil of macro
// values, one polynomial per component. Query offsets are relative to the
// stencil center; values are Grid-ordered (axis 0 fastest).
class StencilInterpolant {
 public:
  StencilInterpolant(std::vector<Vec3> values, int dim, int order, double dX);

  Vec3 eval(const Vec3& offset) const;  // throws ExtrapolationRequested

  // Exact derivatives of P at the center.
  Vec3 center_value() const;
  Vec3 center_d1(int r) const;
  Vec3 center_d2(int r, int s) const;
  // Derivatives of the normalized interpolant Q = P/|P| at the center.
  Vec3 q_center_d1(int r) const;
  Vec3 q_center_d2(int r, int s) const;

  int dim() const { return dim_; }
  int order() const { return order_; }
  double dx() const { return dx_; }

 private:
  std::vector<Vec3> values_;
  int dim_ = 1;
  int order_ = 4;  // 2k
  double dx_ = 0.0;
  std::vector<double> d1w_, d2w_;  // center derivative weights per 1D node
};

// Micro lattice centered at the macro node: [-mu', mu']^d, spacing eps/K,
// frozen ring of width 1 (the reach of the conservative operator).
Grid micro_grid(const MicroSetup& s, double eps, int dim);

// Q = P/|P| sampled on the micro lattice (positions are offsets from the
// macro node). Throws VanishingInterpolant if |P| < 1e-8 anywhere.
VecField micro_initial_data(const StencilInterpolant& P, const Grid& g);

// Field lattices div(a grad m) restricted to the averaging box [-mu, mu]^d,
// one per time step over [0, eta].
struct MicroTrajectory {
  std::vector<VecField> frames;
  double eta = 0.0;
  double norm_drift = 0.0;
};

// HeunP solve of the damped micro problem with the boundary ring frozen at
// the initial data. Throws InstabilityDetected.
MicroTrajectory solve_micro(const VecField& q0, const Coefficient& a, const MicroSetup& s);

MicroResult upscale(const MicroTrajectory& traj, const MicroSetup& s);

// Same sweep with the time quadrature fused into the loop: O(1) memory in
// the step count, identical result up to quadrature roundoff.
MicroResult solve_micro_averaged(const VecField& q0, const Coefficient& a,
                                 const MicroSetup& s);

// Fused sweep that also keeps the per-node time-averaged field (on the
// mu-box) and the final magnetization (on the full mu'-box) for
// boundary-influence studies.
struct MicroDiagnostics {
  MicroResult result;
  VecField time_avg_field;
  VecField final_m;
};
MicroDiagnostics solve_micro_diagnostics(const VecField& q0, const Coefficient& a,
                                         const MicroSetup& s);

// Centered sub-box of half-width `half` copied out of a Dirichlet lattice.
VecField restrict_centered(const VecField& f, double half);

// sum_rs AH_rs d2[r][s]: the homogenized effective field from second
// derivatives of a magnetization.
Vec3 apply_homogenized(const MatD& AH, const std::array<std::array<Vec3, 3>, 3>& d2);

struct ErrorDecomposition {
  double e_approx = 0.0;  // |H_avg - div(grad M A^H)| at the macro node
  double e_avg = 0.0;     // |H_avg - div(grad m_init(0) A^H)|
  double e_disc = 0.0;    // |div(grad m_init(0) A^H) - div(grad M(x_k) A^H)|
};

// Diagnostic split of the upscaling error against a known homogenized
// coefficient; requires a cell-periodic coefficient (NoReferenceAvailable
// otherwise). If h_avg_override is given it replaces the micro solve.
ErrorDecomposition error_decomposition(const Vec3& macro_point, const AnalyticField& M,
                                       const StencilInterpolant& stencil,
                                       const MicroSetup& setup, const Coefficient& a,
                                       const MatD& AH,
                                       const Vec3* h_avg_override = nullptr);

}  // namespace llhmm
