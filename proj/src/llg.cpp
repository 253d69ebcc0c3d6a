#include "llhmm/llg.hpp"

#include <cmath>

#include "llhmm/errors.hpp"
#include "llhmm/fd.hpp"

namespace llhmm {

namespace {

void check_shapes(const VecField& m, const VecField& H) {
  if (!m.grid.same_shape(H.grid)) throw ShapeMismatch("m/H lattice shape mismatch");
}

void check_unit(const VecField& m) {
  if (m.max_norm_deviation() > 1e-10)
    throw NumericalFailure("magnetization is not unit length before the step");
}

// m + dt * k, reusing a scratch field.
void axpy(const VecField& m, double dt, const VecField& k, VecField& out) {
  out.grid = m.grid;
  out.v.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] + dt * k[i];
}

}  // namespace

double max_jump(const VecField& m) {
  const Grid& g = m.grid;
  double out = 0.0;
  const bool periodic = g.boundary == Boundary::Periodic;
  for (int ax = 0; ax < g.dim; ++ax) {
    const int n = g.nodes[ax];
    std::size_t stride = 1;
    for (int a = 0; a < ax; ++a) stride *= static_cast<std::size_t>(g.nodes[a]);
    const std::size_t lines = g.size() / (static_cast<std::size_t>(n) * stride);
    for (std::size_t b = 0; b < lines; ++b)
      for (std::size_t in = 0; in < stride; ++in) {
        const std::size_t base = b * n * stride + in;
        const int hi = periodic ? n : n - 1;
        for (int i = 0; i < hi; ++i) {
          const std::size_t at = base + static_cast<std::size_t>(i) * stride;
          const std::size_t up =
              base + static_cast<std::size_t>(i + 1 == n ? 0 : i + 1) * stride;
          out = std::max(out, norm(m.v[up] - m.v[at]));
        }
      }
  }
  return out;
}

namespace {

bool finite(const VecField& m) {
  for (const Vec3& v : m.v)
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) return false;
  return true;
}

int history_required(Method method) {
  return method == Method::MPE ? 1 : method == Method::MPEA ? 2 : 0;
}

void push_history(IntegratorState& s, VecField h, int keep) {
  s.h_history.insert(s.h_history.begin(), std::move(h));
  if (static_cast<int>(s.h_history.size()) > keep) s.h_history.resize(keep);
}

}  // namespace

void llg_rhs(const VecField& m, const VecField& H, double alpha, VecField& out) {
  check_shapes(m, H);
  out.grid = m.grid;
  out.v.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec3 mxH = cross(m[i], H[i]);
    out[i] = -1.0 * mxH - alpha * cross(m[i], mxH);
  }
}

VecField llg_rhs(const VecField& m, const VecField& H, double alpha) {
  VecField out;
  llg_rhs(m, H, alpha, out);
  return out;
}

void compose_h(const VecField& m, const VecField& H, double alpha, VecField& out) {
  check_shapes(m, H);
  out.grid = m.grid;
  out.v.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = H[i] + alpha * cross(m[i], H[i]);
}

VecField compose_h(const VecField& m, const VecField& H, double alpha) {
  VecField out;
  compose_h(m, H, alpha, out);
  return out;
}

void step_heun_p(IntegratorState& s, const FieldProvider& H, double alpha) {
  check_unit(s.m);
  VecField Hf(s.m.grid), k1, k2, stage;
  H(s.m, s.t, Hf);
  llg_rhs(s.m, Hf, alpha, k1);
  axpy(s.m, s.dt, k1, stage);
  H(stage, s.t + s.dt, Hf);
  llg_rhs(stage, Hf, alpha, k2);
  for (std::size_t i = 0; i < s.m.size(); ++i)
    s.m[i] += 0.5 * s.dt * (k1[i] + k2[i]);
  s.m.project_to_sphere();
  s.t += s.dt;
  ++s.step_index;
}

void step_rk4_p(IntegratorState& s, const FieldProvider& H, double alpha) {
  check_unit(s.m);
  VecField Hf(s.m.grid), k1, k2, k3, k4, stage;
  H(s.m, s.t, Hf);
  llg_rhs(s.m, Hf, alpha, k1);
  axpy(s.m, 0.5 * s.dt, k1, stage);
  H(stage, s.t + 0.5 * s.dt, Hf);
  llg_rhs(stage, Hf, alpha, k2);
  axpy(s.m, 0.5 * s.dt, k2, stage);
  H(stage, s.t + 0.5 * s.dt, Hf);
  llg_rhs(stage, Hf, alpha, k3);
  axpy(s.m, s.dt, k3, stage);
  H(stage, s.t + s.dt, Hf);
  llg_rhs(stage, Hf, alpha, k4);
  for (std::size_t i = 0; i < s.m.size(); ++i)
    s.m[i] += (s.dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  s.m.project_to_sphere();
  s.t += s.dt;
  ++s.step_index;
}

void step_implicit_midpoint(IntegratorState& s, const FieldProvider& H, double alpha,
                            double tol, int max_iter) {
  check_unit(s.m);
  VecField x = s.m, mid(s.m.grid), Hf(s.m.grid), h;
  double diff = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < s.m.size(); ++i) mid[i] = 0.5 * (s.m[i] + x[i]);
    H(mid, s.t + 0.5 * s.dt, Hf);
    compose_h(mid, Hf, alpha, h);
    diff = 0.0;
    for (std::size_t i = 0; i < s.m.size(); ++i) {
      const Vec3 xn = cayley_rotate(s.m[i], 0.5 * s.dt * h[i]);
      diff = std::max(diff, norm_inf(xn - x[i]));
      x[i] = xn;
    }
    if (diff <= tol) {
      s.m = std::move(x);
      s.t += s.dt;
      ++s.step_index;
      return;
    }
  }
  throw FixedPointDivergence(max_iter, diff);
}

namespace {

void step_multistep(IntegratorState& s, const FieldProvider& H, double alpha,
                    bool adams) {
  check_unit(s.m);
  const int need = adams ? 2 : 1;
  if (static_cast<int>(s.h_history.size()) < need)
    throw MissingHistory("multistep h-history not populated");
  VecField Hf(s.m.grid), h_now;
  H(s.m, s.t, Hf);
  compose_h(s.m, Hf, alpha, h_now);
  const VecField& h1 = s.h_history[0];
  for (std::size_t i = 0; i < s.m.size(); ++i) {
    Vec3 h_half = adams ? (23.0 / 12.0) * h_now[i] - (16.0 / 12.0) * h1[i] +
                              (5.0 / 12.0) * s.h_history[1][i]
                        : 1.5 * h_now[i] - 0.5 * h1[i];
    s.m[i] = cayley_rotate(s.m[i], 0.5 * s.dt * h_half);
  }
  push_history(s, std::move(h_now), need);
  s.t += s.dt;
  ++s.step_index;
}

}  // namespace

void step_mpe(IntegratorState& s, const FieldProvider& H, double alpha) {
  step_multistep(s, H, alpha, false);
}

void step_mpea(IntegratorState& s, const FieldProvider& H, double alpha) {
  step_multistep(s, H, alpha, true);
}

void step(IntegratorState& s, const FieldProvider& H, Method method, double alpha) {
  switch (method) {
    case Method::HeunP: step_heun_p(s, H, alpha); return;
    case Method::RK4P: step_rk4_p(s, H, alpha); return;
    case Method::ImplicitMidpoint: step_implicit_midpoint(s, H, alpha); return;
    case Method::MPE: step_mpe(s, H, alpha); return;
    case Method::MPEA: step_mpea(s, H, alpha); return;
  }
}

IntegratorState integrate(VecField m0, const FieldProvider& H, Method method,
                          double dt, long n_steps, double alpha,
                          const std::function<void(const IntegratorState&)>& observer) {
  IntegratorState s;
  s.m = std::move(m0);
  s.dt = dt;
  const int need = history_required(method);
  for (long j = 0; j < n_steps; ++j) {
    if (need > 0 && static_cast<int>(s.h_history.size()) < need) {
      // RK4P startup while the h-history fills.
      VecField Hf(s.m.grid), h;
      H(s.m, s.t, Hf);
      compose_h(s.m, Hf, alpha, h);
      push_history(s, std::move(h), need);
      step_rk4_p(s, H, alpha);
    } else {
      step(s, H, method, alpha);
    }
    if (observer) observer(s);
  }
  return s;
}

bool probe_stable(Method method, VecField m0, const FieldProvider& H, double dt,
                  double alpha, int horizon) {
  IntegratorState s;
  s.m = std::move(m0);
  s.dt = dt;
  const int need = history_required(method);
  const double j0 = std::max(max_jump(s.m), 1e-14);
  VecField prev = s.m;
  try {
    for (int j = 0; j < horizon; ++j) {
      if (need > 0 && static_cast<int>(s.h_history.size()) < need) {
        VecField Hf(s.m.grid), h;
        H(s.m, s.t, Hf);
        compose_h(s.m, Hf, alpha, h);
        push_history(s, std::move(h), need);
        step_rk4_p(s, H, alpha);
      } else {
        step(s, H, method, alpha);
      }
      if (!finite(s.m)) return false;
      double change = 0.0;
      for (std::size_t i = 0; i < s.m.size(); ++i)
        change = std::max(change, norm(s.m[i] - prev[i]));
      if (change > 2.0) return false;
      const double jump = max_jump(s.m);
      // Grew tenfold, or saturated into the nonsmooth regime (unit vectors
      // cap the jump at 2, which can hide the tenfold growth on coarse grids).
      if (jump > 10.0 * j0 || jump > std::max(3.0 * j0, 1.0)) return false;
      prev = s.m;
    }
  } catch (const Error&) {
    return false;
  }
  return true;
}

StabilityTable estimate_stability_limit(Method method, const StabilityProbe& problem,
                                        const std::vector<double>& dx_list, double alpha) {
  StabilityTable table;
  for (double dx : dx_list) {
    const VecField m0 = problem.initial(dx);
    const FieldProvider prov = problem.provider(m0.grid);
    double lo = 1e-7 * dx * dx, hi = 10.0 * dx * dx;
    StabilityRow row;
    row.dx = dx;
    if (probe_stable(method, m0, prov, hi, alpha)) {
      row.dt_max = hi;
      row.bracket_top = true;
      table.rows.push_back(row);
      continue;
    }
    if (!probe_stable(method, m0, prov, lo, alpha))
      throw NoStableStepFound("no stable dt in bracket at dx = " + std::to_string(dx));
    for (int it = 0; it < 12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (probe_stable(method, m0, prov, mid, alpha) ? lo : hi) = mid;
    }
    row.dt_max = lo;
    table.rows.push_back(row);
  }
  // Least-squares slope of log dt_max against log dx.
  if (table.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(table.rows.size());
    for (const auto& r : table.rows) {
      const double lx = std::log(r.dx), ly = std::log(r.dt_max);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    table.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return table;
}

double heun_p_safe_dt(double alpha, double a_max, int dim, double dx, double safety) {
  // Stability radius of Heun's method along arg z = pi - atan(1/alpha):
  // largest r with |1 + z + z^2/2| <= 1.
  const double theta = M_PI - std::atan2(1.0, alpha);
  auto amp = [&](double r) {
    const double re = r * std::cos(theta), im = r * std::sin(theta);
    const double zr = 1.0 + re + 0.5 * (re * re - im * im);
    const double zi = im + re * im;
    return std::sqrt(zr * zr + zi * zi);
  };
  double lo = 0.0, hi = 4.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (amp(mid) <= 1.0 ? lo : hi) = mid;
  }
  const double r_star = lo;
  return safety * r_star * dx * dx /
         (4.0 * dim * a_max * std::sqrt(1.0 + alpha * alpha));
}

}  // namespace llhmm
