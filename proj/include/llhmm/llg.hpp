#pragma once

#include <functional>
#include <vector>

#include "llhmm/grid.hpp"

namespace llhmm {

// Effective field H(m, t) evaluated on the lattice of m. Providers must be
// reentrant and must write a lattice of the same shape.
using FieldProvider = std::function<void(const VecField& m, double t, VecField& H)>;

// f_i = -m_i x H_i - alpha m_i x (m_i x H_i).
void llg_rhs(const VecField& m, const VecField& H, double alpha, VecField& out);
VecField llg_rhs(const VecField& m, const VecField& H, double alpha);

// h_i = H_i + alpha m_i x H_i, so that f = -m x h.
void compose_h(const VecField& m, const VecField& H, double alpha, VecField& out);
VecField compose_h(const VecField& m, const VecField& H, double alpha);

// Closed-form solve of (I - [c]x) x = (I + [c]x) m — the nodewise rotation
// behind the midpoint-type updates. Exactly norm-preserving.
inline Vec3 cayley_rotate(const Vec3& m, const Vec3& c) {
  const Vec3 u = m + cross(c, m);
  const double c2 = dot(c, c);
  return (1.0 / (1.0 + c2)) * (u + cross(c, u) + dot(c, u) * c);
}

enum class Method { HeunP, RK4P, ImplicitMidpoint, MPE, MPEA };

struct IntegratorState {
  VecField m;
  double t = 0.0;
  double dt = 0.0;
  long step_index = 0;
  std::vector<VecField> h_history;  // h(m^{j-1}), then h(m^{j-2})
};

void step_heun_p(IntegratorState& s, const FieldProvider& H, double alpha);
void step_rk4_p(IntegratorState& s, const FieldProvider& H, double alpha);
// Fixed-point iteration on the midpoint system; converged when successive
// iterates differ by <= tol in max norm. Throws FixedPointDivergence.
void step_implicit_midpoint(IntegratorState& s, const FieldProvider& H, double alpha,
                            double tol = 1e-12, int max_iter = 200);
// Midpoint extrapolation: h^{j+1/2} = 3/2 h(m^j) - 1/2 h(m^{j-1}).
void step_mpe(IntegratorState& s, const FieldProvider& H, double alpha);
// Adams-Bashforth-3 weights 23/12, -16/12, 5/12.
void step_mpea(IntegratorState& s, const FieldProvider& H, double alpha);

void step(IntegratorState& s, const FieldProvider& H, Method method, double alpha);

// Runs n_steps from m0. Multistep methods start with two RK4P steps while the
// h-history fills. The observer (if any) sees the state after every step.
IntegratorState integrate(VecField m0, const FieldProvider& H, Method method,
                          double dt, long n_steps, double alpha,
                          const std::function<void(const IntegratorState&)>& observer = {});

// Max node-to-node jump |m_{i+1} - m_i| over all axes; the quantity the
// instability detectors watch (a central difference is blind to the
// period-2 sawtooth mode that blows up first).
double max_jump(const VecField& m);

// Stability probing: a problem is an initial lattice plus a field provider,
// both parametrized by the grid spacing dx.
struct StabilityProbe {
  std::function<VecField(double dx)> initial;
  std::function<FieldProvider(const Grid& g)> provider;
};

struct StabilityRow {
  double dx = 0.0;
  double dt_max = 0.0;
  bool bracket_top = false;  // every probed dt was stable (sentinel)
};

struct StabilityTable {
  std::vector<StabilityRow> rows;
  double slope = 0.0;  // fitted d log(dt_max) / d log(dx)
};

// Bisection (12 iterations) on dt within [1e-7, 10] * dx^2 using the gradient
// -growth instability detector over a 50-step probe horizon.
StabilityTable estimate_stability_limit(Method method, const StabilityProbe& problem,
                                        const std::vector<double>& dx_list, double alpha);

// Runs the probe horizon at the given dt and reports stability.
bool probe_stable(Method method, VecField m0, const FieldProvider& H, double dt,
                  double alpha, int horizon = 50);

// Largest stable HeunP step for an exchange field with coefficient bound
// a_max on a dim-dimensional lattice of spacing dx, damping alpha:
// dt = safety * r*(alpha) / (4 d a_max sqrt(1 + alpha^2)) * dx^2, where
// r*(alpha) is the stability-region radius along the Landau-Lifshitz
// eigenvalue ray arg z = pi - atan(1/alpha).
double heun_p_safe_dt(double alpha, double a_max, int dim, double dx,
                      double safety = 0.9);

}  // namespace llhmm
