// Experiment runner for the distributed proximal-correction library:
//   pcor run            one experiment from a config file
//   pcor sweep          one parameter swept over a value list
//   pcor compare        several configs on the same problem/graph/start
//   pcor validate-graph mixing-matrix certification for a graph
//   pcor audit          lifted-step and residual-identity checks
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include "pcor/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> configs;
  pcor::CliOverrides overrides;
  std::uint64_t seed_value = 0;
  long max_iter_value = 0;
  bool has_seed = false;
  bool has_max_iter = false;

  void finish() {
    if (has_seed) overrides.seed = seed_value;
    if (has_max_iter) overrides.max_iterations = max_iter_value;
  }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool multi_config) {
  if (multi_config)
    cmd->add_option("--config", args.configs, "experiment config file(s)")->required()->expected(-1);
  else
    cmd->add_option("--config", args.config, "experiment config file")->required();
  cmd->add_option("--out", args.overrides.out_dir, "output directory (default: out)");
  cmd->add_option("--seed-override", args.seed_value, "override all seeds")
      ->each([&args](const std::string&) { args.has_seed = true; });
  cmd->add_option("--max-iter", args.max_iter_value, "override max iterations")
      ->each([&args](const std::string&) { args.has_max_iter = true; });
  cmd->add_flag("--dry-run", args.overrides.dry_run, "validate config, touch no output");
}

int report(const pcor::ExperimentOutcome& outcome) {
  if (!outcome.message.empty()) std::cout << outcome.message << "\n";
  for (const auto& a : outcome.artifacts) std::cout << "  " << a << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed proximal-correction experiment harness"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, compare_args, audit_args;
  int audit_transitions = 20;
  double audit_e_norm = 1e-3;

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment");
  add_common(cmd_run, run_args, false);
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(cmd_sweep, sweep_args, false);
  CLI::App* cmd_compare = app.add_subcommand("compare", "compare algorithms on one problem");
  add_common(cmd_compare, compare_args, true);
  CLI::App* cmd_audit = app.add_subcommand("audit", "run perturbed-step and residual audits");
  add_common(cmd_audit, audit_args, false);
  cmd_audit->add_option("--transitions", audit_transitions, "audited transitions (default 20)");
  cmd_audit->add_option("--e-norm", audit_e_norm, "injected error norm (default 1e-3)");

  std::string graph_path;
  int geometric_n = 0;
  std::uint64_t graph_seed = 42;
  std::string export_dir;
  CLI::App* cmd_graph = app.add_subcommand("validate-graph", "certify mixing matrices for a graph");
  cmd_graph->add_option("edge_list", graph_path, "edge list file (N, then 1-based 'i j' lines)");
  cmd_graph->add_option("--geometric", geometric_n, "generate a geometric graph on N agents instead");
  cmd_graph->add_option("--seed", graph_seed, "seed for --geometric (default 42)");
  cmd_graph->add_option("--export-mixing", export_dir, "write W/Wt/C/sqrtC CSV files to this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      run_args.finish();
      return report(pcor::run_experiment(pcor::ExperimentConfig::parse_file(run_args.config),
                                         run_args.overrides));
    }
    if (cmd_sweep->parsed()) {
      sweep_args.finish();
      return report(pcor::run_sweep(pcor::ExperimentConfig::parse_file(sweep_args.config),
                                    sweep_args.overrides));
    }
    if (cmd_compare->parsed()) {
      compare_args.finish();
      std::vector<pcor::ExperimentConfig> cfgs;
      for (const auto& path : compare_args.configs)
        cfgs.push_back(pcor::ExperimentConfig::parse_file(path));
      return report(pcor::compare_algorithms(cfgs, compare_args.overrides));
    }
    if (cmd_audit->parsed()) {
      audit_args.finish();
      return report(pcor::run_audit(pcor::ExperimentConfig::parse_file(audit_args.config),
                                    audit_args.overrides, audit_transitions, audit_e_norm));
    }
    if (cmd_graph->parsed()) {
      if (graph_path.empty() && geometric_n <= 0)
        throw pcor::ConfigError("validate-graph needs an edge list file or --geometric N");
      const pcor::NetworkGraph graph = graph_path.empty()
                                           ? pcor::NetworkGraph::random_geometric(geometric_n, graph_seed)
                                           : pcor::NetworkGraph::load_edge_list(graph_path);
      const pcor::MixingPair pair = pcor::build_metropolis_weights(graph);
      const pcor::ValidationReport report = pcor::validate_mixing_assumptions(pair, graph);
      std::cout << report.to_string();
      if (!export_dir.empty()) {
        pcor::export_mixing_csv(pair, export_dir);
        std::cout << "mixing matrices written to " << export_dir << "\n";
      }
      return report.all_pass() ? 0 : 3;
    }
  } catch (const pcor::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pcor::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
