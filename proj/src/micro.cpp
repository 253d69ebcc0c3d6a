#include "llhmm/micro.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "llhmm/errors.hpp"
#include "llhmm/llg.hpp"

namespace llhmm {

void MicroSetup::validate(double a_max, int dim) const {
  if (!(mu > 0.0) || !(mu_prime > 0.0) || mu > mu_prime + 1e-12)
    throw ConfigError("micro setup requires 0 < mu <= mu_prime");
  if (!(eta > 0.0)) throw ConfigError("micro setup requires eta > 0");
  if (interp_order != 2 && interp_order != 4)
    throw ConfigError("interp_order must be 2 or 4");
  if (points_per_eps < 8) throw ConfigError("points_per_eps must be >= 8");
  if (dt_factor > 0.0) {
    const double bound = heun_p_safe_dt(alpha_micro, a_max, dim, 1.0, 1.0);
    if (dt_factor > bound * (1.0 + 1e-9))
      throw ConfigError("dt_factor " + std::to_string(dt_factor) +
                        " exceeds the HeunP stability bound " + std::to_string(bound));
  }
}

namespace {

// Coefficients of the Lagrange basis polynomial through integer nodes
// -k..k that is 1 at node j; returned in the monomial basis of t.
std::vector<double> lagrange_coeffs(int k, int j) {
  std::vector<double> c{1.0};
  for (int i = -k; i <= k; ++i) {
    if (i == j) continue;
    const double inv = 1.0 / (j - i);
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t d = 0; d < c.size(); ++d) {
      next[d] += c[d] * (-i) * inv;  // (t - i)/(j - i)
      next[d + 1] += c[d] * inv;
    }
    c = std::move(next);
  }
  return c;
}

double lagrange_eval(int k, int j, double tau) {
  double out = 1.0;
  for (int i = -k; i <= k; ++i)
    if (i != j) out *= (tau - i) / (j - i);
  return out;
}

}  // namespace

StencilInterpolant::StencilInterpolant(std::vector<Vec3> values, int dim, int order,
                                       double dX)
    : values_(std::move(values)), dim_(dim), order_(order), dx_(dX) {
  if (order_ != 2 && order_ != 4) throw ConfigError("interpolation order must be 2 or 4");
  if (!(dx_ > 0.0)) throw ConfigError("stencil spacing must be positive");
  const int n = order_ + 1;
  std::size_t expect = 1;
  for (int a = 0; a < dim_; ++a) expect *= static_cast<std::size_t>(n);
  if (values_.size() != expect)
    throw ShapeMismatch("stencil needs (2k+1)^d values, got " +
                        std::to_string(values_.size()));
  const int k = order_ / 2;
  d1w_.resize(n);
  d2w_.resize(n);
  for (int j = -k; j <= k; ++j) {
    const auto c = lagrange_coeffs(k, j);
    d1w_[j + k] = c[1] / dx_;
    d2w_[j + k] = 2.0 * c[2] / (dx_ * dx_);
  }
}

Vec3 StencilInterpolant::eval(const Vec3& offset) const {
  const int k = order_ / 2;
  const int n = order_ + 1;
  std::array<std::array<double, 5>, 3> basis{};
  for (int a = 0; a < dim_; ++a) {
    const double tau = offset[a] / dx_;
    if (std::abs(tau) > k + 1e-9)
      throw ExtrapolationRequested("query " + std::to_string(offset[a]) +
                                   " outside stencil hull of half-width " +
                                   std::to_string(k * dx_));
    for (int j = -k; j <= k; ++j) basis[a][j + k] = lagrange_eval(k, j, tau);
  }
  Vec3 out;
  for (std::size_t flat = 0; flat < values_.size(); ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (int a = 0; a < dim_; ++a) {
      w *= basis[a][rem % n];
      rem /= n;
    }
    out += w * values_[flat];
  }
  return out;
}

Vec3 StencilInterpolant::center_value() const {
  const int k = order_ / 2;
  const int n = order_ + 1;
  std::size_t flat = 0;
  for (int a = dim_ - 1; a >= 0; --a) flat = flat * n + k;
  return values_[flat];
}

Vec3 StencilInterpolant::center_d1(int r) const {
  if (r < 0 || r >= dim_) throw AxisOutOfRange("derivative axis out of range");
  const int k = order_ / 2;
  const int n = order_ + 1;
  std::size_t stride = 1, center = 0, scale = 1;
  for (int a = 0; a < dim_; ++a) {
    if (a == r) stride = scale;
    center += static_cast<std::size_t>(k) * scale;
    scale *= n;
  }
  Vec3 out;
  for (int j = 0; j < n; ++j)
    out += d1w_[j] * values_[center + (j - k) * stride];
  return out;
}

Vec3 StencilInterpolant::center_d2(int r, int s) const {
  if (r < 0 || r >= dim_ || s < 0 || s >= dim_)
    throw AxisOutOfRange("derivative axis out of range");
  const int k = order_ / 2;
  const int n = order_ + 1;
  std::size_t stride_r = 1, stride_s = 1, center = 0, scale = 1;
  for (int a = 0; a < dim_; ++a) {
    if (a == r) stride_r = scale;
    if (a == s) stride_s = scale;
    center += static_cast<std::size_t>(k) * scale;
    scale *= n;
  }
  Vec3 out;
  if (r == s) {
    for (int j = 0; j < n; ++j)
      out += d2w_[j] * values_[center + (j - k) * stride_r];
  } else {
    for (int jr = 0; jr < n; ++jr)
      for (int js = 0; js < n; ++js)
        out += d1w_[jr] * d1w_[js] *
               values_[center + (jr - k) * stride_r + (js - k) * stride_s];
  }
  return out;
}

Vec3 StencilInterpolant::q_center_d1(int r) const {
  return normalized_d1(center_value(), center_d1(r));
}

Vec3 StencilInterpolant::q_center_d2(int r, int s) const {
  return normalized_d2(center_value(), center_d1(r), center_d1(s), center_d2(r, s));
}

Grid micro_grid(const MicroSetup& s, double eps, int dim) {
  return Grid::dirichlet_box(dim, s.mu_prime, s.dx(eps), 1);
}

VecField micro_initial_data(const StencilInterpolant& P, const Grid& g) {
  VecField q(g);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec3 p = P.eval(g.position(i));
    const double n = norm(p);
    if (n < 1e-8)
      throw VanishingInterpolant("interpolant norm " + std::to_string(n) +
                                 " below 1e-8 on the micro box");
    q[i] = p * (1.0 / n);
  }
  return q;
}

VecField restrict_centered(const VecField& f, double half) {
  const Grid& g = f.grid;
  const double h = g.spacing[0];
  // Round up so the copied box always covers [-half, half].
  const int half_n = static_cast<int>(std::ceil(half / h - 1e-9));
  const int center = g.nodes[0] / 2;
  if (half_n > center)
    throw AveragingBoxExceedsData("averaging half-width exceeds the stored lattice");
  Grid sub = Grid::dirichlet_box(g.dim, half_n * h, h, 0);
  const int off = center - half_n;
  VecField out(sub);
  const int n = sub.nodes[0];
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t rem = i, src = 0, scale = 1;
    for (int a = 0; a < g.dim; ++a) {
      src += (rem % n + off) * scale;
      rem /= n;
      scale *= static_cast<std::size_t>(g.nodes[a]);
    }
    out[i] = f[src];
  }
  return out;
}

namespace {

long micro_step_count(const MicroSetup& s, double a_max, int dim, double h) {
  const double c =
      s.dt_factor > 0.0 ? s.dt_factor : heun_p_safe_dt(s.alpha_micro, a_max, dim, 1.0);
  long n_steps = static_cast<long>(std::ceil(s.eta / (c * h * h) - 1e-9));
  return std::max<long>(n_steps, 1);
}

// HeunP sweep over [0, eta] with the boundary ring frozen by the zero field
// there; hands every field lattice div(a grad m), restricted to the
// averaging box, to on_frame(step, t, frame). Returns the step count.
template <typename Fn>
long run_micro(const VecField& q0, const Coefficient& a, const MicroSetup& s,
               double& drift, Fn&& on_frame, VecField* final_m = nullptr) {
  const Grid& g = q0.grid;
  s.validate(a.a_max(), g.dim);
  const double h = g.spacing[0];
  const auto ha = HalfPointCoefficient::sample(g, [&](const Vec3& x) { return a(x); });
  const long n_steps = micro_step_count(s, a.a_max(), g.dim, h);
  const double dt = s.eta / n_steps;

  VecField m = q0, H(g), k1, k2, stage;
  const double jump0 = std::max(max_jump(q0), 1e-3);
  drift = 0.0;
  for (long j = 0; j < n_steps; ++j) {
    div_a_grad(ha, m, H);
    on_frame(j, j * dt, restrict_centered(H, s.mu));
    llg_rhs(m, H, s.alpha_micro, k1);
    stage.grid = g;
    stage.v.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) stage[i] = m[i] + dt * k1[i];
    div_a_grad(ha, stage, H);
    llg_rhs(stage, H, s.alpha_micro, k2);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += 0.5 * dt * (k1[i] + k2[i]);
    try {
      m.project_to_sphere();
    } catch (const ZeroNormBeforeProjection&) {
      throw InstabilityDetected(j);
    }
    drift = std::max(drift, m.max_norm_deviation());
    if (j % 25 == 24 || j + 1 == n_steps) {
      if (!std::isfinite(dot(m[0], m[0])) || max_jump(m) > std::max(10.0 * jump0, 1.0))
        throw InstabilityDetected(j);
    }
  }
  div_a_grad(ha, m, H);
  on_frame(n_steps, s.eta, restrict_centered(H, s.mu));
  if (final_m) *final_m = std::move(m);
  return n_steps;
}

template <bool TwoD>
inline void fused_row_a(int nx, std::size_t row, double inv_h2, double alpha, double dt,
                        const double* __restrict a0, const double* __restrict a1,
                        const double* __restrict mx, const double* __restrict my,
                        const double* __restrict mz, double* __restrict kx,
                        double* __restrict ky, double* __restrict kz, double* __restrict sx,
                        double* __restrict sy, double* __restrict sz) {
  for (int ix = 1; ix < nx - 1; ++ix) {
    const std::size_t i = row + ix;
    const double cx = mx[i], cy = my[i], cz = mz[i];
    const double aE = a0[i], aW = a0[i - 1];
    double Hx = inv_h2 * (aE * (mx[i + 1] - cx) - aW * (cx - mx[i - 1]));
    double Hy = inv_h2 * (aE * (my[i + 1] - cy) - aW * (cy - my[i - 1]));
    double Hz = inv_h2 * (aE * (mz[i + 1] - cz) - aW * (cz - mz[i - 1]));
    if constexpr (TwoD) {
      const double aN = a1[i], aS = a1[i - nx];
      Hx += inv_h2 * (aN * (mx[i + nx] - cx) - aS * (cx - mx[i - nx]));
      Hy += inv_h2 * (aN * (my[i + nx] - cy) - aS * (cy - my[i - nx]));
      Hz += inv_h2 * (aN * (mz[i + nx] - cz) - aS * (cz - mz[i - nx]));
    }
    const double c1x = cy * Hz - cz * Hy;
    const double c1y = cz * Hx - cx * Hz;
    const double c1z = cx * Hy - cy * Hx;
    const double vx = -1.0 * c1x - alpha * (cy * c1z - cz * c1y);
    const double vy = -1.0 * c1y - alpha * (cz * c1x - cx * c1z);
    const double vz = -1.0 * c1z - alpha * (cx * c1y - cy * c1x);
    kx[i] = vx;
    ky[i] = vy;
    kz[i] = vz;
    sx[i] = cx + dt * vx;
    sy[i] = cy + dt * vy;
    sz[i] = cz + dt * vz;
  }
}

// Kernel-weighted accumulation of div(a grad m) over one row of the
// averaging box; everything outside the box is discarded by the final
// restriction, so it is never accumulated.
template <bool TwoD>
inline void accum_row(int nx, std::size_t row, int bx0, int bx1, double inv_h2, double w,
                      const double* __restrict a0, const double* __restrict a1,
                      const double* __restrict mx, const double* __restrict my,
                      const double* __restrict mz, double* __restrict ax,
                      double* __restrict ay, double* __restrict az) {
  for (int ix = bx0; ix < bx1; ++ix) {
    const std::size_t i = row + ix;
    const double cx = mx[i], cy = my[i], cz = mz[i];
    const double aE = a0[i], aW = a0[i - 1];
    double Hx = inv_h2 * (aE * (mx[i + 1] - cx) - aW * (cx - mx[i - 1]));
    double Hy = inv_h2 * (aE * (my[i + 1] - cy) - aW * (cy - my[i - 1]));
    double Hz = inv_h2 * (aE * (mz[i + 1] - cz) - aW * (cz - mz[i - 1]));
    if constexpr (TwoD) {
      const double aN = a1[i], aS = a1[i - nx];
      Hx += inv_h2 * (aN * (mx[i + nx] - cx) - aS * (cx - mx[i - nx]));
      Hy += inv_h2 * (aN * (my[i + nx] - cy) - aS * (cy - my[i - nx]));
      Hz += inv_h2 * (aN * (mz[i + nx] - cz) - aS * (cz - mz[i - nx]));
    }
    ax[i] += w * Hx;
    ay[i] += w * Hy;
    az[i] += w * Hz;
  }
}

template <bool TwoD>
inline void fused_row_b(int nx, std::size_t row, double inv_h2, double alpha, double hdt,
                        const double* __restrict a0, const double* __restrict a1,
                        const double* __restrict sx, const double* __restrict sy,
                        const double* __restrict sz, const double* __restrict kx,
                        const double* __restrict ky, const double* __restrict kz,
                        double* __restrict mx, double* __restrict my, double* __restrict mz,
                        double* __restrict scratch, double& min_norm, double& drift) {
  for (int ix = 1; ix < nx - 1; ++ix) {
    const std::size_t i = row + ix;
    const double cx = sx[i], cy = sy[i], cz = sz[i];
    const double aE = a0[i], aW = a0[i - 1];
    double Hx = inv_h2 * (aE * (sx[i + 1] - cx) - aW * (cx - sx[i - 1]));
    double Hy = inv_h2 * (aE * (sy[i + 1] - cy) - aW * (cy - sy[i - 1]));
    double Hz = inv_h2 * (aE * (sz[i + 1] - cz) - aW * (cz - sz[i - 1]));
    if constexpr (TwoD) {
      const double aN = a1[i], aS = a1[i - nx];
      Hx += inv_h2 * (aN * (sx[i + nx] - cx) - aS * (cx - sx[i - nx]));
      Hy += inv_h2 * (aN * (sy[i + nx] - cy) - aS * (cy - sy[i - nx]));
      Hz += inv_h2 * (aN * (sz[i + nx] - cz) - aS * (cz - sz[i - nx]));
    }
    const double c1x = cy * Hz - cz * Hy;
    const double c1y = cz * Hx - cx * Hz;
    const double c1z = cx * Hy - cy * Hx;
    const double vx = -1.0 * c1x - alpha * (cy * c1z - cz * c1y);
    const double vy = -1.0 * c1y - alpha * (cz * c1x - cx * c1z);
    const double vz = -1.0 * c1z - alpha * (cx * c1y - cy * c1x);
    const double px = mx[i] + hdt * (kx[i] + vx);
    const double py = my[i] + hdt * (ky[i] + vy);
    const double pz = mz[i] + hdt * (kz[i] + vz);
    const double n = std::sqrt(px * px + py * py + pz * pz);
    const double qx = px / n, qy = py / n, qz = pz / n;
    mx[i] = qx;
    my[i] = qy;
    mz[i] = qz;
    scratch[ix] = n;
    scratch[nx + ix] = std::abs(std::sqrt(qx * qx + qy * qy + qz * qz) - 1.0);
  }
  double mn = min_norm, dr = drift;
  for (int ix = 1; ix < nx - 1; ++ix) {
    mn = std::min(mn, scratch[ix]);
    dr = std::max(dr, scratch[nx + ix]);
  }
  min_norm = mn;
  drift = dr;
}

// Same sweep fused into two neighbor passes per step: each pass reads the
// one-ring once and produces the effective field, the LL slope, and the
// kernel-weighted time accumulation in place, instead of materializing the
// intermediate lattices. Components are stored in separate arrays so the
// x-sweeps vectorize, but every elementwise expression matches run_micro
// (including the per-step projection of the frozen ring), so the two routes
// agree to roundoff.
template <bool TwoD>
void heun_p_fused(const HalfPointCoefficient& ha, const MicroSetup& s, long n_steps,
                  double dt, VecField& m, VecField& acc, double& drift) {
  const Grid& g = m.grid;
  const int nx = g.nodes[0];
  const int ny = TwoD ? g.nodes[1] : 1;
  const std::size_t N = g.size();
  const double inv_h2 = 1.0 / (g.spacing[0] * g.spacing[0]);
  const double alpha = s.alpha_micro;
  const double hdt = 0.5 * dt;
  const double* a0 = ha.half[0].data();
  const double* a1 = TwoD ? ha.half[1].data() : nullptr;
  const double jump0 = std::max(max_jump(m), 1e-3);
  drift = 0.0;

  std::vector<double> scratch(2 * static_cast<std::size_t>(nx), 0.0);
  std::vector<double> buf(12 * N, 0.0);
  double* __restrict mx = buf.data();
  double* __restrict my = mx + N;
  double* __restrict mz = my + N;
  double* __restrict sx = mz + N;
  double* __restrict sy = sx + N;
  double* __restrict sz = sy + N;
  double* __restrict kx = sz + N;
  double* __restrict ky = kx + N;
  double* __restrict kz = ky + N;
  double* __restrict ax = kz + N;
  double* __restrict ay = ax + N;
  double* __restrict az = ay + N;
  for (std::size_t i = 0; i < N; ++i) {
    mx[i] = m.v[i].x;
    my[i] = m.v[i].y;
    mz[i] = m.v[i].z;
    sx[i] = mx[i];
    sy[i] = my[i];
    sz[i] = mz[i];
  }

  const int y_lo = TwoD ? 1 : 0, y_hi = TwoD ? ny - 1 : 1;
  // Same centered box the final restriction selects; clamped to the interior
  // because the field vanishes on the frozen ring.
  const int half_n = static_cast<int>(std::ceil(s.mu / g.spacing[0] - 1e-9));
  const int b0 = nx / 2 - half_n, b1 = nx / 2 + half_n + 1;
  const int bx0 = std::max(b0, 1), bx1 = std::min(b1, nx - 1);
  const int by0 = TwoD ? bx0 : 0, by1 = TwoD ? bx1 : 1;
  auto project_node = [&](std::size_t i, long j) {
    const double n = std::sqrt(mx[i] * mx[i] + my[i] * my[i] + mz[i] * mz[i]);
    if (n < 1e-8) throw InstabilityDetected(j);
    mx[i] /= n;
    my[i] /= n;
    mz[i] /= n;
  };
  auto project_ring = [&](long j) {
    if constexpr (TwoD) {
      for (int ix = 0; ix < nx; ++ix) {
        project_node(static_cast<std::size_t>(ix), j);
        project_node(static_cast<std::size_t>(ny - 1) * nx + ix, j);
      }
      for (int iy = 1; iy < ny - 1; ++iy) {
        project_node(static_cast<std::size_t>(iy) * nx, j);
        project_node(static_cast<std::size_t>(iy) * nx + nx - 1, j);
      }
    } else {
      project_node(0, j);
      project_node(static_cast<std::size_t>(nx - 1), j);
    }
  };
  auto soa_max_jump = [&]() {
    double out = 0.0;
    for (int iy = 0; iy < ny; ++iy) {
      const std::size_t row = static_cast<std::size_t>(iy) * nx;
      for (int ix = 0; ix < nx - 1; ++ix) {
        const std::size_t i = row + ix;
        const double dx = mx[i + 1] - mx[i], dy = my[i + 1] - my[i], dz = mz[i + 1] - mz[i];
        out = std::max(out, std::sqrt(dx * dx + dy * dy + dz * dz));
      }
    }
    if constexpr (TwoD) {
      for (int iy = 0; iy < ny - 1; ++iy) {
        const std::size_t row = static_cast<std::size_t>(iy) * nx;
        for (int ix = 0; ix < nx; ++ix) {
          const std::size_t i = row + ix;
          const double dx = mx[i + nx] - mx[i], dy = my[i + nx] - my[i],
                       dz = mz[i + nx] - mz[i];
          out = std::max(out, std::sqrt(dx * dx + dy * dy + dz * dz));
        }
      }
    }
    return out;
  };

  for (long j = 0; j < n_steps; ++j) {
    const double w = s.temporal.scaled(s.eta, j * dt);
    if (w != 0.0)
      for (int iy = by0; iy < by1; ++iy)
        accum_row<TwoD>(nx, static_cast<std::size_t>(iy) * nx, bx0, bx1, inv_h2, w, a0, a1,
                        mx, my, mz, ax, ay, az);
    for (int iy = y_lo; iy < y_hi; ++iy)
      fused_row_a<TwoD>(nx, static_cast<std::size_t>(iy) * nx, inv_h2, alpha, dt, a0, a1,
                        mx, my, mz, kx, ky, kz, sx, sy, sz);
    double min_norm = 1.0;
    for (int iy = y_lo; iy < y_hi; ++iy)
      fused_row_b<TwoD>(nx, static_cast<std::size_t>(iy) * nx, inv_h2, alpha, hdt, a0, a1,
                        sx, sy, sz, kx, ky, kz, mx, my, mz, scratch.data(), min_norm, drift);
    if (min_norm < 1e-8) throw InstabilityDetected(j);
    project_ring(j);
    if (j % 25 == 24 || j + 1 == n_steps) {
      if (!std::isfinite(mx[0] * mx[0] + my[0] * my[0] + mz[0] * mz[0]) ||
          soa_max_jump() > std::max(10.0 * jump0, 1.0))
        throw InstabilityDetected(j);
    }
  }
  const double w_end = s.temporal.scaled(s.eta, s.eta);
  if (w_end != 0.0)
    for (int iy = by0; iy < by1; ++iy)
      accum_row<TwoD>(nx, static_cast<std::size_t>(iy) * nx, bx0, bx1, inv_h2, w_end, a0,
                      a1, mx, my, mz, ax, ay, az);
  for (std::size_t i = 0; i < N; ++i) {
    m.v[i] = {mx[i], my[i], mz[i]};
    acc.v[i] = {ax[i], ay[i], az[i]};
  }
  drift = std::max(drift, m.max_norm_deviation());
}

}  // namespace

MicroTrajectory solve_micro(const VecField& q0, const Coefficient& a, const MicroSetup& s) {
  MicroTrajectory traj;
  traj.eta = s.eta;
  run_micro(q0, a, s, traj.norm_drift,
            [&](long, double, VecField frame) { traj.frames.push_back(std::move(frame)); });
  return traj;
}

MicroResult upscale(const MicroTrajectory& traj, const MicroSetup& s) {
  MicroResult r;
  r.h_avg = space_time_average(traj.frames, s.spatial, s.temporal, s.mu, traj.eta);
  r.norm_drift = traj.norm_drift;
  r.steps = static_cast<long>(traj.frames.size()) - 1;
  return r;
}

MicroDiagnostics solve_micro_diagnostics(const VecField& q0, const Coefficient& a,
                                         const MicroSetup& s) {
  // Fuse the temporal trapezoid into the sweep: accumulate the
  // K0_eta-weighted time integral per node, then apply the spatial kernel.
  // The trapezoid end weights multiply K0_eta(0) = K0_eta(eta) = 0, so a
  // uniform weight dt per frame matches space_time_average exactly.
  const Grid& g = q0.grid;
  MicroDiagnostics d;
  if (g.dim > 2) {
    VecField& acc = d.time_avg_field;
    d.result.steps = run_micro(
        q0, a, s, d.result.norm_drift,
        [&](long j, double t, VecField frame) {
          if (j == 0) acc = VecField(frame.grid);
          const double w = s.temporal.scaled(s.eta, t);
          if (w != 0.0)
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * frame[i];
        },
        &d.final_m);
    const double dt = s.eta / d.result.steps;
    for (auto& v : acc.v) v *= dt;
    d.result.h_avg = spatial_average(acc, s.spatial, s.mu);
    return d;
  }
  s.validate(a.a_max(), g.dim);
  const auto ha = HalfPointCoefficient::sample(g, [&](const Vec3& x) { return a(x); });
  const long n_steps = micro_step_count(s, a.a_max(), g.dim, g.spacing[0]);
  const double dt = s.eta / n_steps;
  d.final_m = q0;
  VecField acc(g);
  if (g.dim == 2)
    heun_p_fused<true>(ha, s, n_steps, dt, d.final_m, acc, d.result.norm_drift);
  else
    heun_p_fused<false>(ha, s, n_steps, dt, d.final_m, acc, d.result.norm_drift);
  for (auto& v : acc.v) v *= dt;
  d.time_avg_field = restrict_centered(acc, s.mu);
  d.result.h_avg = spatial_average(d.time_avg_field, s.spatial, s.mu);
  d.result.steps = n_steps;
  return d;
}

MicroResult solve_micro_averaged(const VecField& q0, const Coefficient& a,
                                 const MicroSetup& s) {
  return solve_micro_diagnostics(q0, a, s).result;
}

Vec3 apply_homogenized(const MatD& AH, const std::array<std::array<Vec3, 3>, 3>& d2) {
  Vec3 out;
  for (int r = 0; r < AH.dim; ++r)
    for (int c = 0; c < AH.dim; ++c)
      if (AH(r, c) != 0.0) out += AH(r, c) * d2[r][c];
  return out;
}

ErrorDecomposition error_decomposition(const Vec3& macro_point, const AnalyticField& M,
                                       const StencilInterpolant& stencil,
                                       const MicroSetup& setup, const Coefficient& a,
                                       const MatD& AH, const Vec3* h_avg_override) {
  if (!a.cell_periodic())
    throw NoReferenceAvailable("error decomposition needs a cell-periodic coefficient");
  const int d = a.dim();
  std::array<std::array<Vec3, 3>, 3> d2_init{}, d2_macro{};
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      d2_init[r][c] = stencil.q_center_d2(r, c);
      d2_macro[r][c] = M.d2(macro_point, r, c);
    }
  const Vec3 field_init = apply_homogenized(AH, d2_init);
  const Vec3 field_macro = apply_homogenized(AH, d2_macro);

  Vec3 h_avg;
  if (h_avg_override) {
    h_avg = *h_avg_override;
  } else {
    const Grid g = micro_grid(setup, a.eps(), d);
    h_avg = solve_micro_averaged(micro_initial_data(stencil, g), a, setup).h_avg;
  }

  ErrorDecomposition e;
  e.e_approx = norm(h_avg - field_macro);
  e.e_avg = norm(h_avg - field_init);
  e.e_disc = norm(field_init - field_macro);
  return e;
}

}  // namespace llhmm
