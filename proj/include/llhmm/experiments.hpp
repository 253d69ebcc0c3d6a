#pragma once

#include <string>
#include <vector>

#include "llhmm/grid.hpp"

namespace llhmm {

// One experiment invocation: defaults for the named experiment overlaid
// with the (optional) JSON config file. Unknown keys and malformed values
// are ConfigError.
struct ExperimentConfig {
  std::string experiment;
  std::string doc;  // merged config, serialized JSON (schema in README)
  int workers = 1;
  bool long_mode = false;

  static ExperimentConfig make(const std::string& experiment, const std::string& config_path,
                               int workers, bool long_mode);

  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;           // non-empty
  std::vector<std::string> str_list(const std::string& key) const;  // non-empty
};

// Experiment output: a metric table serialized as CSV. The header carries a
// schema version and the experiment name; the generated= line is the only
// content excluded from byte-for-byte reproducibility. Column names carry
// units in brackets; columns tagged [s,nondet] hold wall-clock measurements
// and are exempt from the determinism contract.
struct CsvTable {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells);  // ShapeMismatch on arity
  std::string serialize(bool with_timestamp = true) const;
  void write(const std::string& path, bool with_timestamp = true) const;
};

std::string format_number(double v);  // shortest round-trip-stable decimal

CsvTable cmd_integrator_study(const ExperimentConfig& cfg);
CsvTable cmd_stability_study(const ExperimentConfig& cfg);
CsvTable cmd_micro_sweep(const ExperimentConfig& cfg);
CsvTable cmd_hmm_convergence(const ExperimentConfig& cfg);
// Also writes field dumps next to `out` (suffix _<problem>_<source>.csv).
CsvTable cmd_showcase(const ExperimentConfig& cfg, const std::string& out);
CsvTable cmd_cost_model(const ExperimentConfig& cfg);
CsvTable cmd_homogenize(const ExperimentConfig& cfg);

}  // namespace llhmm
