#include "llhmm/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "llhmm/errors.hpp"

namespace llhmm {

namespace {

// Chebyshev T_n(t) by recurrence.
double cheb(int n, double t) {
  if (n == 0) return 1.0;
  double tm = 1.0, tc = t;
  for (int k = 1; k < n; ++k) {
    double tn = 2.0 * t * tc - tm;
    tm = tc;
    tc = tn;
  }
  return tc;
}

// Basis function i of the ansatz, on the natural support.
double basis(int i, int q, bool one_sided, double x) {
  if (one_sided) {
    double w = std::pow(x * (1.0 - x), q + 1);
    return w * cheb(i, 2.0 * x - 1.0);
  }
  double w = std::pow(1.0 - x * x, q + 1);
  return w * cheb(2 * i, x);
}

// In-place Gauss-Jordan inverse; returns the infinity-norm condition number.
double invert(std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  double norm_a = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(a[i][j]);
    norm_a = std::max(norm_a, row);
  }
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300)
      throw IllConditionedSystem("singular moment matrix");
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    const double d = a[col][col];
    for (int j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  double norm_inv = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(inv[i][j]);
    norm_inv = std::max(norm_inv, row);
  }
  a = std::move(inv);
  return norm_a * norm_inv;
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Legendre P_n and P_n' at x by recurrence.
      double pm = 1.0, pc = x;
      for (int k = 2; k <= n; ++k) {
        double pn = ((2.0 * k - 1.0) * x * pc - (k - 1.0) * pm) / k;
        pm = pc;
        pc = pn;
      }
      dp = n * (x * pc - pm) / (x * x - 1.0);
      double dx = pc / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[n - 1 - i] = x;
    weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

double Kernel::operator()(double x) const {
  if (one_sided) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
  } else {
    if (x <= -1.0 || x >= 1.0) return 0.0;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    s += coeffs[i] * basis(static_cast<int>(i), q, one_sided, x);
  return s;
}

std::string Kernel::dump() const {
  std::ostringstream os;
  os << p << " " << q << " " << (one_sided ? 1 : 0) << " " << coeffs.size();
  char buf[32];
  for (double c : coeffs) {
    std::snprintf(buf, sizeof buf, " %.17g", c);
    os << buf;
  }
  return os.str();
}

Kernel Kernel::load(const std::string& text) {
  std::istringstream is(text);
  Kernel k;
  int one;
  std::size_t n;
  if (!(is >> k.p >> k.q >> one >> n)) throw ConfigError("malformed kernel text");
  k.one_sided = one != 0;
  k.coeffs.resize(n);
  for (double& c : k.coeffs)
    if (!(is >> c)) throw ConfigError("malformed kernel text");
  // Recompute the certificate rather than trusting the text.
  std::vector<double> gx, gw;
  gauss_legendre(64, gx, gw);
  const double a = k.one_sided ? 0.0 : -1.0;
  for (int m = 0; m <= k.p; ++m) {
    double mom = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double x = a + (1.0 - a) * 0.5 * (gx[i] + 1.0);
      mom += gw[i] * (1.0 - a) * 0.5 * std::pow(x, m) * k(x);
    }
    k.moment_certificate.push_back(mom);
  }
  return k;
}

Kernel construct_kernel(int p, int q, bool one_sided) {
  if (p < 0 || q < 0 || p > 12 || q > 12)
    throw ConfigError("kernel orders must satisfy 0 <= p, q <= 12");
  Kernel k;
  k.p = p;
  k.q = q;
  k.one_sided = one_sided;

  // Moment conditions: all moments 0..p one-sided; even moments only for the
  // symmetric ansatz (odd ones vanish structurally).
  std::vector<int> moments;
  if (one_sided)
    for (int m = 0; m <= p; ++m) moments.push_back(m);
  else
    for (int m = 0; m <= p; m += 2) moments.push_back(m);
  const int n = static_cast<int>(moments.size());

  std::vector<double> gx, gw;
  gauss_legendre(64, gx, gw);
  const double a = one_sided ? 0.0 : -1.0;
  auto moment_of_basis = [&](int m, int i) {
    double s = 0.0;
    for (std::size_t g = 0; g < gx.size(); ++g) {
      const double x = a + (1.0 - a) * 0.5 * (gx[g] + 1.0);
      s += gw[g] * (1.0 - a) * 0.5 * std::pow(x, m) * basis(i, q, one_sided, x);
    }
    return s;
  };

  std::vector<std::vector<double>> M(n, std::vector<double>(n));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) M[r][c] = moment_of_basis(moments[r], c);
  const double cond = invert(M);
  if (cond > 1e12)
    throw IllConditionedSystem("moment matrix condition " + std::to_string(cond));

  k.coeffs.assign(n, 0.0);
  for (int i = 0; i < n; ++i) k.coeffs[i] = M[i][0];  // rhs = e_0 (moment 0 = 1)

  for (int m = 0; m <= p; ++m) {
    double mom = 0.0;
    for (std::size_t g = 0; g < gx.size(); ++g) {
      const double x = a + (1.0 - a) * 0.5 * (gx[g] + 1.0);
      mom += gw[g] * (1.0 - a) * 0.5 * std::pow(x, m) * k(x);
    }
    k.moment_certificate.push_back(mom);
  }
  return k;
}

Vec3 spatial_average(const VecField& f, const Kernel& spatial, double mu) {
  const Grid& g = f.grid;
  for (int ax = 0; ax < g.dim; ++ax) {
    const double lo = g.coord(ax, 0), hi = g.coord(ax, g.nodes[ax] - 1);
    if (lo > -mu + 1e-12 || hi < mu - 1e-12)
      throw AveragingBoxExceedsData("averaging box [-mu,mu] exceeds lattice data");
  }
  const bool periodic = g.boundary == Boundary::Periodic;
  auto axis_weight = [&](int ax, int i) {
    double w = spatial.scaled(mu, g.coord(ax, i)) * g.spacing[ax];
    if (!periodic && (i == 0 || i == g.nodes[ax] - 1)) w *= 0.5;
    return w;
  };
  Vec3 acc{};
  for (int k = 0; k < g.nodes[2]; ++k)
    for (int j = 0; j < g.nodes[1]; ++j) {
      double wjk = (g.dim > 1 ? axis_weight(1, j) : 1.0) *
                   (g.dim > 2 ? axis_weight(2, k) : 1.0);
      if (wjk == 0.0) continue;
      for (int i = 0; i < g.nodes[0]; ++i) {
        const double w = wjk * axis_weight(0, i);
        if (w != 0.0) acc += w * f[g.index(i, j, k)];
      }
    }
  return acc;
}

Vec3 space_time_average(const std::vector<VecField>& frames, const Kernel& spatial,
                        const Kernel& temporal, double mu, double eta) {
  if (frames.size() < 2) throw AveragingBoxExceedsData("need at least two time frames");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  for (const auto& fr : frames)
    if (!fr.grid.same_shape(frames[0].grid))
      throw ShapeMismatch("trajectory frames have differing shapes");
  const std::size_t T = frames.size();
  const double dt = eta / static_cast<double>(T - 1);
  Vec3 acc{};
  for (std::size_t j = 0; j < T; ++j) {
    const double t = static_cast<double>(j) * dt;
    double w = temporal.scaled(eta, t) * dt;
    if (j == 0 || j + 1 == T) w *= 0.5;
    if (w == 0.0) continue;
    acc += w * spatial_average(frames[j], spatial, mu);
  }
  return acc;
}

}  // namespace llhmm
