#pragma once

#include "pcor/run.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pcor {

// Flat key-value experiment description with [problem] / [graph] /
// [algorithm] / [criterion] / [output] / [sweep] sections; diff-able
// provenance for every run artifact.
struct ExperimentConfig {
  // [problem]
  std::string problem_kind = "log_allocation";  // log_allocation | coupled_qp | file
  int num_agents = 50;
  std::uint64_t problem_seed = 7;
  int qp_p = 3, qp_q = 2;
  std::string problem_path;

  // [graph]
  std::string graph_kind = "geometric";  // geometric | edge_list | path | complete
  std::uint64_t graph_seed = 42;
  std::string graph_path;

  // [algorithm]
  std::string method = "pc";  // pc | pc_zy | dppa
  double alpha = 2.0;
  double dppa_alpha0 = 1.0;
  double dppa_exponent = 0.6;
  long max_iterations = 1000;
  double error_target = 0.0;
  std::uint64_t init_seed = 1;
  double exact_certificate = 1e-12;
  long solver_max_iterations = 400000;

  // [criterion]
  std::string criterion_mode = "exact";  // exact | absolute | relative
  std::string schedule_family = "power"; // power | geometric
  double schedule_scale = 1.0;
  double schedule_exponent = 2.0;

  // [output]
  std::string csv_path;
  std::string summary_path;

  // [sweep]
  std::string sweep_parameter;  // alpha | precision_exponent
  std::vector<double> sweep_values;

  std::string label;  // derived from the config file stem

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse(std::istream& in, const std::string& origin);
  std::string canonical_text() const;  // normalized echo for provenance
  // Problem + graph + initial-iterate identity, used by the fairness check.
  std::string fairness_key() const;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> max_iterations;
  bool dry_run = false;
  std::string out_dir = "out";
};

struct MaterializedExperiment {
  ProblemInstance problem;
  NetworkGraph graph;
  MixingPair mixing;
  ReferenceSolution reference;
  RunConfig config;
};

MaterializedExperiment materialize(const ExperimentConfig& cfg, const CliOverrides& overrides = {});

// Exit codes: 0 success, 2 config error, 3 numerical failure.
struct ExperimentOutcome {
  int exit_code = 0;
  std::string message;
  std::vector<std::string> artifacts;
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const CliOverrides& overrides);
ExperimentOutcome run_sweep(const ExperimentConfig& cfg, const CliOverrides& overrides);
ExperimentOutcome compare_algorithms(const std::vector<ExperimentConfig>& cfgs,
                                     const CliOverrides& overrides);
ExperimentOutcome run_audit(const ExperimentConfig& cfg, const CliOverrides& overrides,
                            int transitions, double e_norm);

void write_metrics_csv(const std::string& path, const std::vector<IterationMetrics>& rows);
std::string metrics_csv_text(const std::vector<IterationMetrics>& rows);

}  // namespace pcor
