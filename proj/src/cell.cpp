#include "llhmm/cell.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llhmm/errors.hpp"

namespace llhmm {

namespace {

// Negated conservative operator -div(a grad .) on a periodic lattice; SPD on
// the zero-mean subspace, which is what CG needs.
struct CellOperator {
  const Grid& g;
  const HalfPointCoefficient& a;

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::size_t idx = g.index(i, j, k);
          double s = 0.0;
          for (int r = 0; r < g.dim; ++r) {
            int ip[3] = {i, j, k}, im[3] = {i, j, k};
            const int n = g.nodes[r];
            ip[r] = (ip[r] + 1) % n;
            im[r] = (im[r] + n - 1) % n;
            const std::size_t up = g.index(ip[0], ip[1], ip[2]);
            const std::size_t dn = g.index(im[0], im[1], im[2]);
            const double h2 = g.spacing[r] * g.spacing[r];
            s += (a.half[r][idx] * (x[up] - x[idx]) -
                  a.half[r][dn] * (x[idx] - x[dn])) /
                 h2;
          }
          y[idx] = -s;
        }
  }
};

void subtract_mean(std::vector<double>& x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  for (double& v : x) v -= mean;
}

double dot_v(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Jacobi-preconditioned CG to relative residual 1e-10.
std::vector<double> pcg(const CellOperator& op, std::vector<double> b) {
  const Grid& g = op.g;
  const std::size_t n = b.size();
  subtract_mean(b);

  // Diagonal of -div(a grad): sum_r (a_{+1/2} + a_{-1/2}) / h_r^2.
  std::vector<double> diag(n, 0.0);
  {
    const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::size_t idx = g.index(i, j, k);
          double d = 0.0;
          for (int r = 0; r < g.dim; ++r) {
            int im[3] = {i, j, k};
            im[r] = (im[r] + g.nodes[r] - 1) % g.nodes[r];
            const std::size_t dn = g.index(im[0], im[1], im[2]);
            d += (op.a.half[r][idx] + op.a.half[r][dn]) /
                 (g.spacing[r] * g.spacing[r]);
          }
          diag[idx] = d;
        }
  }

  const double bnorm = std::sqrt(dot_v(b, b));
  std::vector<double> x(n, 0.0);
  if (bnorm == 0.0) return x;

  std::vector<double> r = b, z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  subtract_mean(z);
  p = z;
  double rz = dot_v(r, z);

  const int max_iter = std::max<int>(10000, 40 * *std::max_element(
                                                    g.nodes.begin(), g.nodes.end()));
  std::vector<double> history;
  for (int it = 0; it < max_iter; ++it) {
    op.apply(p, q);
    const double alpha = rz / dot_v(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double res = std::sqrt(dot_v(r, r)) / bnorm;
    history.push_back(res);
    if (res <= 1e-10) {
      subtract_mean(x);
      return x;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    subtract_mean(z);
    const double rz_new = dot_v(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (history.size() > 50) history.erase(history.begin(), history.end() - 50);
  throw SolverDivergence("cell problem CG did not reach residual 1e-10", history);
}

}  // namespace

HomogenizedMatrix HomogenizedMatrix::closed_form(const MatD& m) {
  HomogenizedMatrix h;
  h.matrix = m;
  h.source = Source::ClosedForm;
  return h;
}

std::vector<ScalarField> solve_cell_problem(const Coefficient& c, int resolution) {
  if (resolution < 16) throw ConfigError("cell resolution must be >= 16");
  const Grid g = Grid::periodic(c.dim(), resolution, 1.0);
  const HalfPointCoefficient a =
      HalfPointCoefficient::sample(g, [&](const Vec3& y) { return c.cell(y); });
  const CellOperator op{g, a};

  std::vector<ScalarField> chi;
  for (int r = 0; r < c.dim(); ++r) {
    // b = -rhs of div(a grad chi_r) = -d a/d y_r, i.e. +D^-(a e_r) per node.
    std::vector<double> b(g.size(), 0.0);
    const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::size_t idx = g.index(i, j, k);
          int im[3] = {i, j, k};
          im[r] = (im[r] + g.nodes[r] - 1) % g.nodes[r];
          const std::size_t dn = g.index(im[0], im[1], im[2]);
          b[idx] = (a.half[r][idx] - a.half[r][dn]) / g.spacing[r];
        }
    ScalarField f(g);
    f.v = pcg(op, std::move(b));
    chi.push_back(std::move(f));
  }
  return chi;
}

HomogenizedMatrix homogenized_matrix(const Coefficient& c, int resolution) {
  const std::vector<ScalarField> chi = solve_cell_problem(c, resolution);
  const Grid& g = chi[0].grid;
  const HalfPointCoefficient a =
      HalfPointCoefficient::sample(g, [&](const Vec3& y) { return c.cell(y); });

  MatD AH;
  AH.dim = c.dim();
  const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
  for (int r = 0; r < c.dim(); ++r)
    for (int s = 0; s < c.dim(); ++s) {
      double sum = 0.0;
      for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
          for (int i = 0; i < nx; ++i) {
            const std::size_t idx = g.index(i, j, k);
            int ip[3] = {i, j, k};
            ip[r] = (ip[r] + 1) % g.nodes[r];
            const std::size_t up = g.index(ip[0], ip[1], ip[2]);
            const double dchi = (chi[s][up] - chi[s][idx]) / g.spacing[r];
            sum += a.half[r][idx] * ((r == s ? 1.0 : 0.0) + dchi);
          }
      AH(r, s) = sum / static_cast<double>(g.size());
    }
  // Symmetrize; the discrete quadrature breaks exact symmetry at O(h^2).
  for (int r = 0; r < c.dim(); ++r)
    for (int s = r + 1; s < c.dim(); ++s) {
      const double v = 0.5 * (AH(r, s) + AH(s, r));
      AH(r, s) = AH(s, r) = v;
    }
  if (!AH.symmetric_positive_definite())
    throw NonSPDMatrix("homogenized matrix is not symmetric positive definite");

  HomogenizedMatrix h;
  h.matrix = AH;
  h.source = HomogenizedMatrix::Source::CellProblem;
  h.resolution = resolution;
  return h;
}

}  // namespace llhmm
