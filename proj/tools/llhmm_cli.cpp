#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "llhmm/errors.hpp"
#include "llhmm/experiments.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  int workers = 1;
  bool long_mode = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file overlaying the defaults");
  sub->add_option("--out", c.out, "output CSV path");
  sub->add_option("--workers", c.workers, "worker threads for independent solves")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--long", c.long_mode, "enable the expensive opt-in runs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference HMM experiments for the Landau-Lifshitz equation"};
  app.require_subcommand(1);

  // subcommand name -> (experiment key, runner)
  struct Entry {
    const char* sub;
    const char* experiment;
    const char* help;
    llhmm::CsvTable (*run)(const llhmm::ExperimentConfig&);
  };
  const Entry entries[] = {
      {"integrators", "integrators", "time-stepper error vs dt on homogenized problems",
       llhmm::cmd_integrator_study},
      {"stability", "stability", "empirical dt_max vs dx and C_stab vs alpha",
       llhmm::cmd_stability_study},
      {"micro-sweep", "micro-sweep", "averaging error vs micro-problem parameters",
       llhmm::cmd_micro_sweep},
      {"hmm-convergence", "hmm-convergence",
       "HMM error vs macro spacing for the s1-s4 micro setups", llhmm::cmd_hmm_convergence},
      {"cost", "cost", "micro-problem wall time vs eps and K", llhmm::cmd_cost_model},
      {"homogenize", "homogenize", "print the homogenized coefficient matrix",
       llhmm::cmd_homogenize},
  };

  Common opts[7];
  int i = 0;
  for (const Entry& e : entries) add_common(app.add_subcommand(e.sub, e.help), opts[i++]);
  add_common(app.add_subcommand(
                 "showcase", "locally/quasi-periodic demonstrations with field dumps"),
             opts[6]);

  CLI11_PARSE(app, argc, argv);

  try {
    llhmm::CsvTable table;
    std::string out;
    i = 0;
    for (const Entry& e : entries) {
      if (app.get_subcommand(e.sub)->parsed()) {
        const Common& c = opts[i];
        const auto cfg =
            llhmm::ExperimentConfig::make(e.experiment, c.config, c.workers, c.long_mode);
        table = e.run(cfg);
        out = c.out.empty() ? std::string(e.experiment) + ".csv" : c.out;
        if (std::string(e.sub) == "homogenize")
          for (const auto& row : table.rows)
            std::printf("A^H[%s][%s] = %s\n", row[2].c_str(), row[3].c_str(),
                        row[4].c_str());
      }
      ++i;
    }
    if (app.get_subcommand("showcase")->parsed()) {
      const Common& c = opts[6];
      const auto cfg =
          llhmm::ExperimentConfig::make("showcase", c.config, c.workers, c.long_mode);
      out = c.out.empty() ? "showcase.csv" : c.out;
      table = llhmm::cmd_showcase(cfg, out);
    }
    table.write(out);
    std::fprintf(stderr, "wrote %zu rows to %s\n", table.rows.size(), out.c_str());
    return 0;
  } catch (const llhmm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const llhmm::SyntaxError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const llhmm::Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
