#pragma once

#include <vector>

#include "llhmm/coefficient.hpp"
#include "llhmm/llg.hpp"
#include "llhmm/micro.hpp"
#include "llhmm/reference.hpp"

namespace llhmm {

// One HMM run: the macro equation on a periodic grid, with the effective
// field at each node supplied by a freshly solved micro problem.
struct HmmConfig {
  Grid macro_grid;   // periodic
  VecField initial;  // unit-norm lattice on macro_grid
  double alpha_macro = 0.01;
  double T = 0.0;
  double dt_macro = 0.0;  // 0: half the empirical stability estimate
  Method integrator = Method::MPEA;
  MicroSetup micro;
  Coefficient coefficient;
  int workers = 1;

  explicit HmmConfig(Coefficient c) : coefficient(std::move(c)) {}
  void validate() const;  // throws ConfigError, StencilWiderThanGrid
};

// Empirical largest stable dt for the configured integrator on a surrogate
// homogenized problem with coefficient bound a_max at the macro spacing.
double estimate_macro_dt(const HmmConfig& cfg);

// Provider that, per macro node, gathers the (2k+1)^d stencil (periodic
// wrap), normalizes the interpolated initial data, solves the micro problem
// and upscales. Micro failures are rethrown annotated with the node index.
FieldProvider hmm_field_provider(const HmmConfig& cfg);

Trajectory run_hmm(const HmmConfig& cfg, std::vector<double> output_times = {});
// Same stepping with an arbitrary provider (reference substitution runs).
Trajectory run_hmm_with_provider(const HmmConfig& cfg, const FieldProvider& H,
                                 std::vector<double> output_times = {});

}  // namespace llhmm
