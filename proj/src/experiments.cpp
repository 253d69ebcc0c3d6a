#include "llhmm/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "llhmm/cell.hpp"
#include "llhmm/errors.hpp"
#include "llhmm/macro.hpp"
#include "llhmm/micro.hpp"
#include "llhmm/problems.hpp"
#include "llhmm/reference.hpp"

namespace llhmm {

namespace {

using nlohmann::json;

json defaults_for(const std::string& experiment) {
  if (experiment == "integrators")
    return json{
        {"problems", {"EX1", "EX2"}},
        {"methods", {"HeunP", "RK4P", "IMP", "MPE", "MPEA"}},
        {"dX", 0.02},
        {"eps", 0.02},
        {"alpha", 0.01},
        {"T", 0.01},
        {"dt_list", {1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3}},
        {"cell_resolution", 128},
    };
  if (experiment == "stability")
    return json{
        {"methods", {"HeunP", "RK4P", "MPE", "MPEA"}},
        {"preset", "EX1"},
        {"eps", 0.02},
        {"alpha", 0.01},
        {"dx_list", {1.0 / 25, 1.0 / 35, 1.0 / 50, 1.0 / 70, 1.0 / 100}},
        {"alpha_list", {0.01, 0.03, 0.1, 0.3, 1.0}},
        {"dx_for_cstab", 0.02},
        {"cell_resolution", 512},
    };
  if (experiment == "micro-sweep")
    return json{
        {"preset", "EX2"},
        {"eps", 0.01},
        {"sweep", "mu"},
        {"values", json::array()},  // empty selects the per-axis default list
        {"mu_over_eps", 3.9},
        {"mu_prime_over_eps", 9.0},
        {"eta_over_eps2", 0.7},
        {"alpha_micro", 1.2},
        {"alpha_list", {1.0, 0.01}},
        {"points_per_eps", 10},
        {"interp_order", 4},
        {"dX", 1.0 / 12},
        {"macro_point", {0.0, 0.0, 0.0}},
        {"cell_resolution", 128},
    };
  if (experiment == "hmm-convergence")
    return json{
        {"preset", "EX2"},
        {"eps", 0.01},
        {"alpha", 0.01},
        {"T", 0.05},
        {"dX_list", {1.0 / 8, 1.0 / 12, 1.0 / 16}},
        {"setups", {"baseline", "s1", "s2", "s3", "s4"}},
        {"mu_over_eps", 3.9},
        {"alpha_micro", 1.2},
        {"points_per_eps", 8},
        {"cell_resolution", 128},
        {"baseline_window", 0.04},
        {"full_matrix", false},  // default: s4 over all of dX_list, the rest
                                 // only at the middle entry; --long runs all
    };
  if (experiment == "showcase")
    return json{
        {"problems", {"LOC1D"}},
        {"LOC1D",
         {{"eps", 0.01},
          {"alpha", 0.01},
          {"T", 0.1},
          {"dX", 1.0 / 24},
          {"mu_over_eps", 3.9},
          {"mu_prime_over_eps", 8.0},
          {"eta_over_eps2", 0.9},
          {"alpha_micro", 1.2},
          {"points_per_eps", 10},
          {"dns_points_per_eps", 12},
          {"baseline_window", 0.04}}},
        {"QUASI2D",
         {{"eps", 0.02},
          {"alpha", 0.01},
          {"T", 0.05},
          {"dX", 1.0 / 16},
          {"mu_over_eps", 3.9},
          {"mu_prime_over_eps", 6.0},
          {"eta_over_eps2", 0.7},
          {"alpha_micro", 1.2},
          {"points_per_eps", 10},
          {"dns_points_per_eps", 14.72},  // 736 nodes, a multiple of 16
          {"baseline_window", 0.08}}},
        {"LOC2D",
         {{"eps", 0.02},
          {"alpha", 0.1},
          {"T", 0.05},
          {"dX", 1.0 / 16},
          {"mu_over_eps", 5.0},
          {"mu_prime_over_eps", 6.0},
          {"eta_over_eps2", 1.1},
          {"alpha_micro", 1.2},
          {"points_per_eps", 10},
          {"dns_points_per_eps", 14.72},
          {"baseline_window", 0.08}}},
    };
  if (experiment == "cost")
    return json{
        {"preset", "EX2"},
        {"eps_list", {0.02, 0.01, 0.005}},
        {"points_per_eps", 10},
        {"k_list", {10, 20}},
        {"k_eps", 0.01},
        {"mu_over_eps", 3.9},
        {"mu_prime_over_eps", 6.0},
        {"eta_over_eps2", 0.7},
        {"alpha_micro", 1.2},
        {"dX", 1.0 / 12},
        {"repetitions", 5},
    };
  if (experiment == "homogenize")
    return json{
        {"preset", "EX1"},
        {"eps", 0.02},
        {"resolution", 256},
    };
  throw ConfigError("unknown experiment: " + experiment);
}

// File values overlay the defaults; keys absent from the defaults are
// rejected so typos fail loudly. Nested tables merge recursively.
void merge_into(json& base, const json& overlay, const std::string& scope) {
  for (const auto& [key, value] : overlay.items()) {
    if (!base.contains(key))
      throw ConfigError("unknown config key: " + scope + key);
    if (base[key].is_object() && value.is_object())
      merge_into(base[key], value, scope + key + ".");
    else
      base[key] = value;
  }
}

json parsed(const ExperimentConfig& cfg) { return json::parse(cfg.doc); }

json field(const ExperimentConfig& cfg, const std::string& key) {
  json j = parsed(cfg);
  if (!j.contains(key)) throw ConfigError("missing config key: " + key);
  return j[key];
}

std::vector<double> as_number_list(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty())
    throw ConfigError("config key " + key + " must be a non-empty list");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("config key " + key + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Method method_from(const std::string& name) {
  if (name == "HeunP") return Method::HeunP;
  if (name == "RK4P") return Method::RK4P;
  if (name == "IMP") return Method::ImplicitMidpoint;
  if (name == "MPE") return Method::MPE;
  if (name == "MPEA") return Method::MPEA;
  throw ConfigError("unknown method: " + name);
}

// Field evaluations of the exchange term per step.
int stages_of(const std::string& name) {
  if (name == "HeunP") return 2;
  if (name == "RK4P") return 4;
  return 1;  // MPE/MPEA reuse the history
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

FieldProvider ah_provider(const MatD& AH, int order) {
  return [AH, order](const VecField& m, double, VecField& out) {
    div_grad_AH(m, AH, order, out);
  };
}

// Largest empirically stable dt on the given problem (single-dx probe).
double probed_dt_max(Method method, const VecField& m0, const MatD& AH, int order,
                     double alpha) {
  const double dx = m0.grid.spacing[0];
  StabilityProbe probe;
  probe.initial = [m0](double) { return m0; };
  probe.provider = [AH, order](const Grid&) { return ah_provider(AH, order); };
  return estimate_stability_limit(method, probe, {dx}, alpha).rows[0].dt_max;
}

// The (2k+1)^d stencil of analytic initial data around x0, grid-ordered.
StencilInterpolant analytic_stencil(const AnalyticField& M, const Vec3& x0, double dX,
                                    int order) {
  const int k = order / 2;
  std::vector<Vec3> values;
  if (M.dim == 1) {
    for (int j = -k; j <= k; ++j) values.push_back(M.value({x0.x + j * dX, 0, 0}));
  } else {
    for (int j2 = -k; j2 <= k; ++j2)
      for (int j1 = -k; j1 <= k; ++j1)
        values.push_back(M.value({x0.x + j1 * dX, x0.y + j2 * dX, 0}));
  }
  return StencilInterpolant(std::move(values), M.dim, order, dX);
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// Axis-0 or axis-1 midline of a 2D lattice as a 1D periodic lattice.
VecField cross_section(const VecField& f, int axis) {
  const Grid& g = f.grid;
  const int n = g.nodes[0];
  Grid line = Grid::periodic(1, n, g.extent(axis));
  VecField out(line);
  const int mid = g.nodes[1 - axis] / 2;
  for (int i = 0; i < n; ++i) {
    const std::size_t src = axis == 0 ? static_cast<std::size_t>(mid) * n + i
                                      : static_cast<std::size_t>(i) * n + mid;
    out[i] = f[src];
  }
  return out;
}

void dump_to_file(const VecField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write field dump: " + path);
  dump_field_csv(f, os);
}

}  // namespace

ExperimentConfig ExperimentConfig::make(const std::string& experiment,
                                        const std::string& config_path, int workers,
                                        bool long_mode) {
  json doc = defaults_for(experiment);
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot read config file: " + config_path);
    json overlay;
    try {
      overlay = json::parse(is);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + config_path + ": " + e.what());
    }
    if (!overlay.is_object())
      throw ConfigError("config file " + config_path + " must hold a JSON object");
    merge_into(doc, overlay, "");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.doc = doc.dump();
  cfg.workers = workers;
  cfg.long_mode = long_mode;
  return cfg;
}

double ExperimentConfig::num(const std::string& key) const {
  const json v = field(*this, key);
  if (!v.is_number()) throw ConfigError("config key " + key + " must be a number");
  return v.get<double>();
}

int ExperimentConfig::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v)) throw ConfigError("config key " + key + " must be an integer");
  return static_cast<int>(v);
}

std::string ExperimentConfig::str(const std::string& key) const {
  const json v = field(*this, key);
  if (!v.is_string()) throw ConfigError("config key " + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> ExperimentConfig::list(const std::string& key) const {
  return as_number_list(field(*this, key), key);
}

std::vector<std::string> ExperimentConfig::str_list(const std::string& key) const {
  const json v = field(*this, key);
  if (!v.is_array() || v.empty())
    throw ConfigError("config key " + key + " must be a non-empty list");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError("config key " + key + " must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size())
    throw ShapeMismatch("csv row arity " + std::to_string(cells.size()) +
                        " does not match " + std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(cells));
}

std::string CsvTable::serialize(bool with_timestamp) const {
  std::ostringstream os;
  os << "# schema=llhmm-csv-1\n";
  os << "# experiment=" << experiment << "\n";
  if (with_timestamp) os << "# generated=" << timestamp_utc() << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c)
    os << columns[c] << (c + 1 < columns.size() ? "," : "\n");
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      os << row[c] << (c + 1 < row.size() ? "," : "\n");
  return os.str();
}

void CsvTable::write(const std::string& path, bool with_timestamp) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write output file: " + path);
  os << serialize(with_timestamp);
}

CsvTable cmd_integrator_study(const ExperimentConfig& cfg) {
  const double dX = cfg.num("dX"), alpha = cfg.num("alpha"), T = cfg.num("T");
  std::vector<double> dt_list = cfg.list("dt_list");
  std::sort(dt_list.begin(), dt_list.end());
  const auto methods = cfg.str_list("methods");

  CsvTable table;
  table.experiment = cfg.experiment;
  table.columns = {"problem", "method", "dt[1]", "l2_error[1]", "stable[0/1]", "slope[1]"};

  for (const auto& problem : cfg.str_list("problems")) {
    const Coefficient co = Coefficient::preset(problem, cfg.num("eps"));
    const MatD AH = homogenized_matrix(co, cfg.integer("cell_resolution")).matrix;
    const int n = static_cast<int>(std::lround(1.0 / dX));
    const Grid g = Grid::periodic(co.dim(), n, 1.0);
    const VecField m0 = initial_data(problem).sample(g);
    const FieldProvider H = ah_provider(AH, 4);
    const VecField ref =
        record_run(m0, H, Method::RK4P, dt_list.front() / 4, alpha, T).final_field();

    for (const auto& mname : methods) {
      const Method method = method_from(mname);
      std::vector<double> fit_dt, fit_err;
      std::vector<std::vector<std::string>> pending;
      for (double dt : dt_list) {
        bool stable = probe_stable(method, m0, H, dt, alpha);
        double err = std::numeric_limits<double>::infinity();
        try {
          err = l2_error(record_run(m0, H, method, dt, alpha, T).final_field(), ref).l2;
        } catch (const Error&) {
          stable = false;
        }
        if (!std::isfinite(err)) stable = false;
        if (stable && err > 0) {
          fit_dt.push_back(dt);
          fit_err.push_back(err);
        }
        pending.push_back({problem, mname, format_number(dt), format_number(err),
                           stable ? "1" : "0", ""});
      }
      // order estimate from the smallest stable steps
      if (fit_dt.size() > 4) {
        fit_dt.resize(4);
        fit_err.resize(4);
      }
      const std::string slope =
          fit_dt.size() >= 2 ? format_number(fit_loglog_slope(fit_dt, fit_err)) : "";
      for (auto& row : pending) {
        row.back() = slope;
        table.add_row(std::move(row));
      }
    }
  }
  return table;
}

CsvTable cmd_stability_study(const ExperimentConfig& cfg) {
  const Coefficient co = Coefficient::preset(cfg.str("preset"), cfg.num("eps"));
  const MatD AH = homogenized_matrix(co, cfg.integer("cell_resolution")).matrix;
  const AnalyticField data = initial_data(cfg.str("preset"));
  const auto methods = cfg.str_list("methods");

  StabilityProbe probe;
  probe.initial = [&data, dim = co.dim()](double dx) {
    const int n = static_cast<int>(std::lround(1.0 / dx));
    return data.sample(Grid::periodic(dim, n, 1.0));
  };
  probe.provider = [AH](const Grid&) { return ah_provider(AH, 2); };

  CsvTable table;
  table.experiment = cfg.experiment;
  table.columns = {"block",      "method",   "dx[1]",     "alpha[1]", "dt_max[1]",
                   "dx_slope[1]", "c_stab[1]", "stages[1]", "cost[1]"};

  const std::vector<double> dx_list = cfg.list("dx_list");
  for (const auto& mname : methods) {
    const StabilityTable t =
        estimate_stability_limit(method_from(mname), probe, dx_list, cfg.num("alpha"));
    for (const auto& row : t.rows)
      table.add_row({"dtmax", mname, format_number(row.dx), format_number(cfg.num("alpha")),
                     format_number(row.dt_max), format_number(t.slope), "", "", ""});
  }

  const double dx = cfg.num("dx_for_cstab");
  for (double alpha : cfg.list("alpha_list"))
    for (const auto& mname : methods) {
      const StabilityTable t =
          estimate_stability_limit(method_from(mname), probe, {dx}, alpha);
      const double c_stab = t.rows[0].dt_max / (dx * dx);
      const int s = stages_of(mname);
      table.add_row({"cstab", mname, format_number(dx), format_number(alpha),
                     format_number(t.rows[0].dt_max), "", format_number(c_stab),
                     format_number(s), format_number(s / c_stab)});
    }
  return table;
}

CsvTable cmd_micro_sweep(const ExperimentConfig& cfg) {
  const std::string preset = cfg.str("preset"), sweep = cfg.str("sweep");
  const double eps0 = cfg.num("eps"), dX = cfg.num("dX");
  const std::vector<double> p = cfg.list("macro_point");
  const Vec3 x0{p.size() > 0 ? p[0] : 0, p.size() > 1 ? p[1] : 0, p.size() > 2 ? p[2] : 0};

  std::vector<double> values;
  {
    const json v = field(cfg, "values");
    if (v.is_array() && !v.empty()) values = as_number_list(v, "values");
  }
  if (values.empty()) {
    if (sweep == "mu") values = {2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    else if (sweep == "mu_prime") values = {4.5, 5.0, 5.5, 6.0, 7.0, 8.0, 9.0};
    else if (sweep == "eta") values = {0.1, 0.2, 0.3, 0.45, 0.6, 0.8, 1.0, 1.2};
    else if (sweep == "alpha") values = {0.01, 0.05, 0.2, 0.5, 1.0, 1.2};
    else if (sweep == "eps") values = {0.02, 0.01};
    else throw ConfigError("unknown sweep axis: " + sweep);
  }

  const AnalyticField M = initial_data(preset);
  const StencilInterpolant stencil = analytic_stencil(M, x0, dX, cfg.integer("interp_order"));

  CsvTable table;
  table.experiment = cfg.experiment;
  table.columns = {"sweep",          "preset",        "eps[1]",
                   "mu_over_eps[1]", "mu_prime_over_eps[1]", "eta_over_eps2[1]",
                   "alpha_micro[1]", "e_avg[1]",      "e_approx[1]",
                   "e_disc[1]"};

  // The homogenized matrix comes from the unit cell problem, so it does not
  // depend on eps; solve it once for the whole sweep.
  const MatD AH =
      homogenized_matrix(Coefficient::preset(preset, eps0), cfg.integer("cell_resolution"))
          .matrix;

  auto run_point = [&](const std::string& label, double eps, const MicroSetup& setup) {
    const Coefficient co = Coefficient::preset(preset, eps);
    const ErrorDecomposition e = error_decomposition(x0, M, stencil, setup, co, AH);
    table.add_row({label, preset, format_number(eps), format_number(setup.mu / eps),
                   format_number(setup.mu_prime / eps),
                   format_number(setup.eta / (eps * eps)),
                   format_number(setup.alpha_micro), format_number(e.e_avg),
                   format_number(e.e_approx), format_number(e.e_disc)});
    return e;
  };

  auto base_setup = [&](double eps) {
    MicroSetup s;
    s.mu = cfg.num("mu_over_eps") * eps;
    s.mu_prime = cfg.num("mu_prime_over_eps") * eps;
    s.eta = cfg.num("eta_over_eps2") * eps * eps;
    s.alpha_micro = cfg.num("alpha_micro");
    s.points_per_eps = cfg.integer("points_per_eps");
    s.interp_order = cfg.integer("interp_order");
    return s;
  };

  for (double v : values) {
    MicroSetup s = base_setup(eps0);
    if (sweep == "mu") {
      s.mu = v * eps0;
      run_point(sweep, eps0, s);
    } else if (sweep == "mu_prime") {
      s.mu_prime = v * eps0;
      run_point(sweep, eps0, s);
    } else if (sweep == "eta") {
      for (double alpha : cfg.list("alpha_list")) {
        s.eta = v * eps0 * eps0;
        s.alpha_micro = alpha;
        run_point(sweep, eps0, s);
      }
    } else if (sweep == "alpha") {
      s.alpha_micro = v;
      run_point(sweep, eps0, s);
    } else if (sweep == "eps") {
      // The saturation level of the averaging error carries a micro
      // discretization bias that decays like K^-2 and would otherwise mask
      // the eps-rate; measure at K and 2K and extrapolate it away.
      MicroSetup coarse = base_setup(v);
      MicroSetup fine = coarse;
      fine.points_per_eps *= 2;
      const ErrorDecomposition ec = run_point("eps", v, coarse);
      const ErrorDecomposition ef = run_point("eps-refined", v, fine);
      const double ext = (4.0 * ef.e_avg - ec.e_avg) / 3.0;
      table.add_row({"eps-richardson", preset, format_number(v),
                     format_number(fine.mu / v), format_number(fine.mu_prime / v),
                     format_number(fine.eta / (v * v)),
                     format_number(fine.alpha_micro), format_number(ext),
                     format_number(ef.e_approx), format_number(ef.e_disc)});
    } else {
      throw ConfigError("unknown sweep axis: " + sweep);
    }
  }
  return table;
}

CsvTable cmd_hmm_convergence(const ExperimentConfig& cfg) {
  const std::string preset = cfg.str("preset");
  const double eps = cfg.num("eps"), alpha = cfg.num("alpha"), T = cfg.num("T");
  const double mu = cfg.num("mu_over_eps") * eps;
  const Coefficient co = Coefficient::preset(preset, eps);
  const MatD AH = homogenized_matrix(co, cfg.integer("cell_resolution")).matrix;
  const AnalyticField data = initial_data(preset);

  struct Setup {
    std::string name;
    double eta_over_eps2;
    double mu_prime_over_eps;
  };
  const std::vector<Setup> known = {
      {"s1", 0.15, 4.0}, {"s2", 0.45, 5.5}, {"s3", 0.7, 7.5}, {"s4", 1.0, 10.0}};

  std::vector<double> dX_list = cfg.list("dX_list");
  std::sort(dX_list.begin(), dX_list.end(), std::greater<>());
  const bool full = cfg.long_mode || field(cfg, "full_matrix").get<bool>();
  const double dX_mid = dX_list[dX_list.size() / 2];

  CsvTable table;
  table.experiment = cfg.experiment;
  table.columns = {"setup", "dX[1]", "l2_error[1]", "slope[1]"};

  struct Entry {
    std::string setup;
    double dX;
    double err;
  };
  std::vector<Entry> entries;

  for (double dX : dX_list) {
    const int n = static_cast<int>(std::lround(1.0 / dX));
    const Grid g = Grid::periodic(co.dim(), n, 1.0);
    const VecField m0 = data.sample(g);

    HmmConfig hmm(co);
    hmm.macro_grid = g;
    hmm.initial = m0;
    hmm.alpha_macro = alpha;
    hmm.T = T;
    hmm.workers = cfg.workers;
    hmm.micro.mu = mu;
    hmm.micro.alpha_micro = cfg.num("alpha_micro");
    hmm.micro.points_per_eps = cfg.integer("points_per_eps");
    // The stability probe assumes the worst-case exchange strength a_max, but
    // the upscaled field is governed by the homogenized coefficient, whose
    // largest eigenvalue is several times smaller; the full estimate still
    // leaves that margin.
    const double dt = estimate_macro_dt(hmm);
    hmm.dt_macro = dt;

    const VecField ref = run_homogenized(AH, m0, dt, alpha, T, 4).final_field();

    for (const auto& sname : cfg.str_list("setups")) {
      if (!full && sname != "s4" && dX != dX_mid) continue;
      double err = 0.0;
      if (sname == "baseline") {
        err = l2_error(run_averaged_baseline(co, cfg.num("baseline_window"), m0, dt,
                                             alpha, T, 4)
                           .final_field(),
                       ref)
                  .l2;
      } else {
        const auto it = std::find_if(known.begin(), known.end(),
                                     [&](const Setup& s) { return s.name == sname; });
        if (it == known.end()) throw ConfigError("unknown micro setup: " + sname);
        hmm.micro.eta = it->eta_over_eps2 * eps * eps;
        hmm.micro.mu_prime = it->mu_prime_over_eps * eps;
        err = l2_error(run_hmm(hmm).final_field(), ref).l2;
      }
      entries.push_back({sname, dX, err});
    }
  }

  for (const auto& e : entries) {
    std::vector<double> xs, ys;
    for (const auto& o : entries)
      if (o.setup == e.setup) {
        xs.push_back(o.dX);
        ys.push_back(o.err);
      }
    const std::string slope =
        xs.size() >= 2 ? format_number(fit_loglog_slope(xs, ys)) : "";
    table.add_row({e.setup, format_number(e.dX), format_number(e.err), slope});
  }
  return table;
}

CsvTable cmd_showcase(const ExperimentConfig& cfg, const std::string& out) {
  CsvTable table;
  table.experiment = cfg.experiment;
  table.columns = {"problem", "metric", "value[1]"};

  std::string base = out;
  if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
    base = base.substr(0, base.size() - 4);

  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  for (const auto& problem : cfg.str_list("problems")) {
    const json pj = field(cfg, problem);
    auto pnum = [&](const char* key) {
      if (!pj.contains(key) || !pj[key].is_number())
        throw ConfigError("showcase." + problem + " needs numeric key " + key);
      return pj[key].get<double>();
    };
    const double eps = pnum("eps"), alpha = pnum("alpha"), T = pnum("T"), dX = pnum("dX");
    const Coefficient co = Coefficient::preset(problem, eps);
    const int dim = co.dim();

    const int n_dns = static_cast<int>(std::lround(pnum("dns_points_per_eps") / eps));
    if (dim == 2 && !cfg.long_mode)
      throw ConfigError("2D showcase problem " + problem +
                        " is opt-in: rerun with --long (direct simulation on a " +
                        std::to_string(n_dns) + "^2 grid)");
    if (dim == 2 && n_dns > 1500)
      throw ConfigError("2D direct-simulation grids above 1500^2 are not supported");

    const int n_macro = static_cast<int>(std::lround(1.0 / dX));
    const Grid gm = Grid::periodic(dim, n_macro, 1.0);
    const std::string data_name = dim == 1 ? "EX1" : "EX2";
    const VecField m0 = initial_data(data_name).sample(gm);

    HmmConfig hmm(co);
    hmm.macro_grid = gm;
    hmm.initial = m0;
    hmm.alpha_macro = alpha;
    hmm.T = T;
    hmm.workers = cfg.workers;
    hmm.micro.mu = pnum("mu_over_eps") * eps;
    hmm.micro.mu_prime = pnum("mu_prime_over_eps") * eps;
    hmm.micro.eta = pnum("eta_over_eps2") * eps * eps;
    hmm.micro.alpha_micro = pnum("alpha_micro");
    hmm.micro.points_per_eps = static_cast<int>(pnum("points_per_eps"));
    const double dt_macro = 0.5 * estimate_macro_dt(hmm);
    hmm.dt_macro = dt_macro;

    const auto t_hmm = clock::now();
    const VecField hmm_final = run_hmm(hmm).final_field();
    const double wall_hmm = seconds_since(t_hmm);

    const Grid gd = Grid::periodic(dim, n_dns, 1.0);
    const VecField d0 = initial_data(data_name).sample(gd);
    HmmConfig dns_probe = hmm;
    dns_probe.macro_grid = gd;
    dns_probe.initial = d0;
    const double dt_dns = 0.7 * estimate_macro_dt(dns_probe);
    const auto t_dns = clock::now();
    const VecField dns_final = run_dns(co, d0, dt_dns, alpha, T).final_field();
    const double wall_dns = seconds_since(t_dns);

    const VecField base_final =
        run_averaged_baseline(co, pnum("baseline_window"), m0, dt_macro, alpha, T, 4)
            .final_field();

    const double e_hmm = l2_error(hmm_final, dns_final).l2;
    const double e_base = l2_error(base_final, dns_final).l2;
    table.add_row({problem, "hmm_vs_dns_l2", format_number(e_hmm)});
    table.add_row({problem, "baseline_vs_dns_l2", format_number(e_base)});
    table.add_row({problem, "dns_nodes_per_axis", format_number(n_dns)});
    table.add_row({problem, "hmm_wall[s,nondet]", format_number(wall_hmm)});
    table.add_row({problem, "dns_wall[s,nondet]", format_number(wall_dns)});
    table.add_row({problem, "dns_over_hmm_wall[s,nondet]",
                   format_number(wall_dns / wall_hmm)});

    if (dim == 1) {
      dump_to_file(hmm_final, base + "_" + problem + "_hmm.csv");
      dump_to_file(dns_final, base + "_" + problem + "_dns.csv");
      dump_to_file(base_final, base + "_" + problem + "_baseline.csv");
    } else {
      for (int axis = 0; axis < 2; ++axis) {
        const std::string tag = axis == 0 ? "_x2mid" : "_x1mid";
        dump_to_file(cross_section(hmm_final, axis), base + "_" + problem + "_hmm" + tag + ".csv");
        dump_to_file(cross_section(dns_final, axis), base + "_" + problem + "_dns" + tag + ".csv");
        dump_to_file(cross_section(base_final, axis),
                     base + "_" + problem + "_baseline" + tag + ".csv");
      }
    }
  }
  return table;
}

CsvTable cmd_cost_model(const ExperimentConfig& cfg) {
  const std::string preset = cfg.str("preset");
  const int reps = cfg.integer("repetitions");
  const AnalyticField M = initial_data(preset);
  const Vec3 x0 = M.dim == 1 ? Vec3{0.25, 0, 0} : Vec3{0.25, 0.25, 0};
  const StencilInterpolant stencil = analytic_stencil(M, x0, cfg.num("dX"), 4);

  CsvTable table;
  table.experiment = cfg.experiment;
  table.columns = {"block",        "eps[1]",           "K[1]",
                   "measured[s,nondet]", "predicted_rel[1]", "measured_rel[s,nondet]",
                   "ratio[s,nondet]"};

  auto time_point = [&](double eps, int K) {
    MicroSetup s;
    s.mu = cfg.num("mu_over_eps") * eps;
    s.mu_prime = cfg.num("mu_prime_over_eps") * eps;
    s.eta = cfg.num("eta_over_eps2") * eps * eps;
    s.alpha_micro = cfg.num("alpha_micro");
    s.points_per_eps = K;
    const Coefficient co = Coefficient::preset(preset, eps);
    const VecField q0 = micro_initial_data(stencil, micro_grid(s, eps, co.dim()));
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      solve_micro_averaged(q0, co, s);
      best = std::min(best, std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count());
    }
    // cost model: steps x nodes ~ (eta/eps^2) (mu'/eps)^d K^(2+d)
    const int d = co.dim();
    const double predicted = cfg.num("eta_over_eps2") *
                             std::pow(cfg.num("mu_prime_over_eps"), d) *
                             std::pow(static_cast<double>(K), 2 + d);
    return std::pair<double, double>{best, predicted};
  };

  const std::vector<double> eps_list = cfg.list("eps_list");
  if (eps_list.empty()) throw ConfigError("eps_list must be non-empty");
  const int K0 = cfg.integer("points_per_eps");
  double m_ref = 0, p_ref = 0;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const auto [m, p] = time_point(eps_list[i], K0);
    if (i == 0) {
      m_ref = m;
      p_ref = p;
    }
    table.add_row({"eps", format_number(eps_list[i]), format_number(K0),
                   format_number(m), format_number(p / p_ref), format_number(m / m_ref),
                   format_number((m / m_ref) / (p / p_ref))});
  }

  const double k_eps = cfg.num("k_eps");
  double mk_ref = 0, pk_ref = 0;
  const std::vector<double> k_list = cfg.list("k_list");
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    const int K = static_cast<int>(std::lround(k_list[i]));
    const auto [m, p] = time_point(k_eps, K);
    if (i == 0) {
      mk_ref = m;
      pk_ref = p;
    }
    table.add_row({"K", format_number(k_eps), format_number(K), format_number(m),
                   format_number(p / pk_ref), format_number(m / mk_ref),
                   format_number((m / mk_ref) / (p / pk_ref))});
  }
  return table;
}

CsvTable cmd_homogenize(const ExperimentConfig& cfg) {
  const Coefficient co = Coefficient::preset(cfg.str("preset"), cfg.num("eps"));
  const HomogenizedMatrix H = homogenized_matrix(co, cfg.integer("resolution"));

  CsvTable table;
  table.experiment = cfg.experiment;
  table.columns = {"preset", "eps[1]", "row", "col", "value[1]", "resolution[1]"};
  for (int r = 0; r < H.matrix.dim; ++r)
    for (int c = 0; c < H.matrix.dim; ++c)
      table.add_row({cfg.str("preset"), format_number(cfg.num("eps")), format_number(r),
                     format_number(c), format_number(H.matrix(r, c)),
                     format_number(H.resolution)});
  return table;
}

}  // namespace llhmm
