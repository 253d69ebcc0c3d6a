#pragma once

#include <vector>

#include "llhmm/coefficient.hpp"
#include "llhmm/fd.hpp"
#include "llhmm/grid.hpp"

namespace llhmm {

// Effective coefficient matrix A^H together with where it came from.
struct HomogenizedMatrix {
  enum class Source { ClosedForm, CellProblem };

  MatD matrix;
  Source source = Source::CellProblem;
  int resolution = 0;  // nodes per axis of the cell solve (0 for closed form)

  static HomogenizedMatrix closed_form(const MatD& m);
};

// Corrector fields chi_r, r = 1..d, on a periodic unit-cell lattice:
//   div(a grad chi_r) = -d a / d y_r,  zero lattice average.
// Conservative FD discretization, Jacobi-preconditioned CG to relative
// residual 1e-10. Throws SolverDivergence if CG stalls.
std::vector<ScalarField> solve_cell_problem(const Coefficient& c, int resolution);

// A^H = integral_Y a(y) (I + (grad chi)^T) dy, quadrature on the periodic
// lattice using half-point fluxes (in 1D this reproduces the harmonic mean
// of the half-point samples exactly). Output symmetrized; SPD and
// eigenvalue bounds [a_min, a_max] are enforced with a small slack.
HomogenizedMatrix homogenized_matrix(const Coefficient& c, int resolution);

}  // namespace llhmm
