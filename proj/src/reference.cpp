#include "llhmm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <set>

#include "llhmm/errors.hpp"

namespace llhmm {

Trajectory record_run(VecField m0, const FieldProvider& H, Method method, double dt,
                      double alpha, double T, std::vector<double> output_times) {
  Trajectory traj;
  if (T <= 0.0) {
    traj.times.push_back(0.0);
    traj.fields.push_back(std::move(m0));
    return traj;
  }
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(T / dt - 1e-9)));
  const double step = T / n_steps;
  if (output_times.empty()) output_times = {0.0, T};
  std::set<long> record;
  for (double t : output_times)
    record.insert(std::clamp<long>(std::lround(t / step), 0, n_steps));
  if (record.count(0)) {
    traj.times.push_back(0.0);
    traj.fields.push_back(m0);
  }
  integrate(std::move(m0), H, method, step, n_steps, alpha,
            [&](const IntegratorState& s) {
              if (record.count(s.step_index)) {
                traj.times.push_back(s.step_index * step);
                traj.fields.push_back(s.m);
              }
            });
  return traj;
}

Trajectory run_dns(const Coefficient& a, const VecField& m0, double dt, double alpha,
                   double T, Method method, std::vector<double> output_times) {
  const Grid& g = m0.grid;
  if (g.boundary != Boundary::Periodic) throw ConfigError("DNS expects a periodic grid");
  for (int ax = 0; ax < g.dim; ++ax)
    if (g.spacing[ax] > a.eps() / 8 * (1.0 + 1e-12))
      throw UnderResolved("DNS grid spacing " + std::to_string(g.spacing[ax]) +
                          " exceeds eps/8 = " + std::to_string(a.eps() / 8));
  auto ha = std::make_shared<HalfPointCoefficient>(
      HalfPointCoefficient::sample(g, [&](const Vec3& x) { return a(x); }));
  FieldProvider H = [ha](const VecField& m, double, VecField& out) {
    div_a_grad(*ha, m, out);
  };
  return record_run(m0, H, method, dt, alpha, T, std::move(output_times));
}

Trajectory run_homogenized(const MatD& AH, const VecField& m0, double dt, double alpha,
                           double T, int order, Method method,
                           std::vector<double> output_times) {
  FieldProvider H = [AH, order](const VecField& m, double, VecField& out) {
    div_grad_AH(m, AH, order, out);
  };
  return record_run(m0, H, method, dt, alpha, T, std::move(output_times));
}

double averaged_coefficient(const Coefficient& a, double window) {
  if (window < a.eps() * (1.0 - 1e-12))
    throw ConfigError("averaging window must be at least eps");
  const int n = a.dim() == 1 ? 20000 : 300;
  const double lo = 0.5 - window / 2;
  double sum = 0.0;
  if (a.dim() == 1) {
    for (int i = 0; i < n; ++i) sum += a({lo + (i + 0.5) / n * window, 0, 0});
    return sum / n;
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      sum += a({lo + (i + 0.5) / n * window, lo + (j + 0.5) / n * window, 0});
  return sum / (static_cast<double>(n) * n);
}

Trajectory run_averaged_baseline(const Coefficient& a, double window, const VecField& m0,
                                 double dt, double alpha, double T, int order,
                                 Method method, std::vector<double> output_times) {
  const MatD AH = MatD::identity(a.dim(), averaged_coefficient(a, window));
  return run_homogenized(AH, m0, dt, alpha, T, order, method, std::move(output_times));
}

ErrorReport l2_error(const VecField& fa, const VecField& fb) {
  const VecField* coarse = &fa;
  const VecField* fine = &fb;
  if (fine->grid.spacing[0] > coarse->grid.spacing[0]) std::swap(coarse, fine);
  const Grid& gc = coarse->grid;
  const Grid& gf = fine->grid;
  if (gc.dim != gf.dim) throw IncommensurateGrids("dimension mismatch");
  ErrorReport rep;
  std::array<long, 3> ratio{1, 1, 1};
  if (gc.same_shape(gf)) {
    rep.grid_note = "identical lattices";
  } else {
    for (int ax = 0; ax < gc.dim; ++ax) {
      const double q = gc.spacing[ax] / gf.spacing[ax];
      ratio[ax] = std::lround(q);
      if (ratio[ax] < 1 || std::abs(q - ratio[ax]) > 1e-9 ||
          gf.nodes[ax] != gc.nodes[ax] * ratio[ax])
        throw IncommensurateGrids("spacings are not integer multiples");
    }
    rep.grid_note = "fine lattice restricted to coarse nodes";
  }
  double sum = 0.0;
  double cell = 1.0;
  for (int ax = 0; ax < gc.dim; ++ax) cell *= gc.spacing[ax];
  for (std::size_t i = 0; i < coarse->size(); ++i) {
    std::size_t rem = i, fi = 0, scale = 1;
    for (int ax = 0; ax < gc.dim; ++ax) {
      fi += (rem % gc.nodes[ax]) * ratio[ax] * scale;
      rem /= gc.nodes[ax];
      scale *= static_cast<std::size_t>(gf.nodes[ax]);
    }
    const Vec3 d = (*coarse)[i] - (*fine)[fi];
    sum += dot(d, d);
    rep.linf = std::max(rep.linf, norm(d));
  }
  rep.l2 = std::sqrt(sum * cell);
  return rep;
}

void dump_field_csv(const VecField& f, std::ostream& out) {
  const Grid& g = f.grid;
  out << "index,x1,x2,x3,m1,m2,m3\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 x = g.position(i);
    const Vec3& m = f[i];
    out << i << ',' << x.x << ',' << x.y << ',' << x.z << ',' << m.x << ',' << m.y
        << ',' << m.z << '\n';
  }
}

}  // namespace llhmm
