#include "llhmm/macro.hpp"

#include <cmath>
#include <string>

#include "llhmm/errors.hpp"
#include "llhmm/parallel.hpp"
#include "llhmm/problems.hpp"

namespace llhmm {

void HmmConfig::validate() const {
  if (macro_grid.boundary != Boundary::Periodic)
    throw ConfigError("HMM macro grid must be periodic");
  const int k = micro.interp_order / 2;
  for (int ax = 0; ax < macro_grid.dim; ++ax)
    if (2 * k + 1 > macro_grid.nodes[ax])
      throw StencilWiderThanGrid("interpolation stencil wider than the macro grid");
  if (micro.mu_prime > k * macro_grid.spacing[0] * (1.0 + 1e-12))
    throw ConfigError("micro box mu' exceeds the stencil hull k*dX");
  micro.validate(coefficient.a_max(), macro_grid.dim);
  if (!initial.grid.same_shape(macro_grid))
    throw ConfigError("initial data does not live on the macro grid");
  if (!(T >= 0.0)) throw ConfigError("final time must be nonnegative");
  if (dt_macro > 0.0 && T > 0.0 && dt_macro > estimate_macro_dt(*this))
    throw ConfigError("dt_macro exceeds the stability estimate for the integrator");
}

double estimate_macro_dt(const HmmConfig& cfg) {
  // Surrogate: exchange field a_max * Laplacian on a small periodic grid at
  // the macro spacing, probed with the configured integrator.
  const int dim = cfg.macro_grid.dim;
  const double a_max = cfg.coefficient.a_max();
  const AnalyticField M = initial_data(dim == 1 ? "EX1" : "EX2");
  StabilityProbe probe;
  probe.initial = [dim, M](double dx) {
    const int n = 16;
    return M.sample(Grid::periodic(dim, n, n * dx));
  };
  probe.provider = [a_max](const Grid& g) -> FieldProvider {
    const MatD AH = MatD::identity(g.dim, a_max);
    return [AH](const VecField& m, double, VecField& out) { div_grad_AH(m, AH, 2, out); };
  };
  const StabilityTable table = estimate_stability_limit(
      cfg.integrator, probe, {cfg.macro_grid.spacing[0]}, cfg.alpha_macro);
  return table.rows[0].dt_max;
}

FieldProvider hmm_field_provider(const HmmConfig& cfg) {
  const Coefficient a = cfg.coefficient;
  const MicroSetup micro = cfg.micro;
  const int workers = cfg.workers;
  const int k = micro.interp_order / 2;
  return [a, micro, workers, k](const VecField& m, double, VecField& H) {
    const Grid& g = m.grid;
    H.grid = g;
    H.v.resize(m.size());
    const Grid mg = micro_grid(micro, a.eps(), g.dim);
    parallel_for(m.size(), workers, [&](std::size_t idx) {
      try {
        int c[3] = {static_cast<int>(idx % g.nodes[0]),
                    static_cast<int>((idx / g.nodes[0]) % g.nodes[1]),
                    static_cast<int>(idx / (static_cast<std::size_t>(g.nodes[0]) *
                                            g.nodes[1]))};
        std::vector<Vec3> vals;
        vals.reserve(static_cast<std::size_t>(std::pow(2 * k + 1, g.dim)));
        auto wrap = [&](int i, int ax) {
          const int n = g.nodes[ax];
          return ((i % n) + n) % n;
        };
        if (g.dim == 1) {
          for (int j = -k; j <= k; ++j)
            vals.push_back(m[g.index(wrap(c[0] + j, 0))]);
        } else if (g.dim == 2) {
          for (int j2 = -k; j2 <= k; ++j2)
            for (int j1 = -k; j1 <= k; ++j1)
              vals.push_back(m[g.index(wrap(c[0] + j1, 0), wrap(c[1] + j2, 1))]);
        } else {
          for (int j3 = -k; j3 <= k; ++j3)
            for (int j2 = -k; j2 <= k; ++j2)
              for (int j1 = -k; j1 <= k; ++j1)
                vals.push_back(m[g.index(wrap(c[0] + j1, 0), wrap(c[1] + j2, 1),
                                         wrap(c[2] + j3, 2))]);
        }
        StencilInterpolant st(std::move(vals), g.dim, micro.interp_order, g.spacing[0]);
        H[idx] = solve_micro_averaged(micro_initial_data(st, mg), a, micro).h_avg;
      } catch (const Error& e) {
        throw NumericalFailure("micro problem at macro node " + std::to_string(idx) +
                               ": " + e.what());
      }
    });
  };
}

Trajectory run_hmm_with_provider(const HmmConfig& cfg, const FieldProvider& H,
                                 std::vector<double> output_times) {
  cfg.validate();
  const double dt = cfg.dt_macro > 0.0 ? cfg.dt_macro : 0.5 * estimate_macro_dt(cfg);
  return record_run(cfg.initial, H, cfg.integrator, dt, cfg.alpha_macro, cfg.T,
                    std::move(output_times));
}

Trajectory run_hmm(const HmmConfig& cfg, std::vector<double> output_times) {
  return run_hmm_with_provider(cfg, hmm_field_provider(cfg), std::move(output_times));
}

}  // namespace llhmm
