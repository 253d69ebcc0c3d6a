#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "llhmm/coefficient.hpp"
#include "llhmm/fd.hpp"
#include "llhmm/grid.hpp"
#include "llhmm/llg.hpp"

namespace llhmm {

// Magnetization snapshots at selected times of a single solve.
struct Trajectory {
  std::vector<double> times;
  std::vector<VecField> fields;

  const VecField& final_field() const { return fields.back(); }
};

struct ErrorReport {
  double l2 = 0.0;
  double linf = 0.0;
  std::string grid_note;
};

// Integrates m0 under the provider to time T (dt is adjusted to divide T
// exactly) and records snapshots at the requested times, snapped to the
// nearest step. Empty request records t = 0 and t = T. Multistep methods
// start with RK4P steps, as in integrate().
Trajectory record_run(VecField m0, const FieldProvider& H, Method method, double dt,
                      double alpha, double T, std::vector<double> output_times = {});

// eps-resolving direct simulation of the oscillatory equation. The grid of
// m0 must resolve eps (dx <= eps/8, UnderResolved otherwise).
Trajectory run_dns(const Coefficient& a, const VecField& m0, double dt, double alpha,
                   double T, Method method = Method::MPEA,
                   std::vector<double> output_times = {});

// Homogenized solve with the constant coefficient matrix AH at the given
// spatial stencil order.
Trajectory run_homogenized(const MatD& AH, const VecField& m0, double dt, double alpha,
                           double T, int order = 4, Method method = Method::MPEA,
                           std::vector<double> output_times = {});

// Naive baseline: the arithmetic mean of a^eps over a window (>= eps)
// centered in the domain replaces A^H.
Trajectory run_averaged_baseline(const Coefficient& a, double window, const VecField& m0,
                                 double dt, double alpha, double T, int order = 4,
                                 Method method = Method::MPEA,
                                 std::vector<double> output_times = {});

double averaged_coefficient(const Coefficient& a, double window);

// L2/Linf distance between two lattices. Different lattices are compared by
// restricting the finer one to the coarser by exact node coincidence; the
// spacings must be commensurate (IncommensurateGrids otherwise).
ErrorReport l2_error(const VecField& fa, const VecField& fb);

// Snapshot dump, one node per line: index, coordinates, m1, m2, m3.
void dump_field_csv(const VecField& f, std::ostream& out);

}  // namespace llhmm
