#pragma once

#include "pcor/algorithms.hpp"
#include "pcor/diagnostics.hpp"
#include "pcor/problems.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pcor {

struct IterationMetrics {
  long k = 0;
  double solution_error = kNaN;       // |X^k - 1 (x*)'| (full rows for the QP family)
  double consensus_violation = kNaN;  // |X^k - 1 (xbar)'| over the decision block
  double constraint_violation = kNaN; // consensus part + positive coupled part
  double lyapunov = kNaN;             // |xi^k - xi*|^2_{P^2} when a lift is available
  double omega_norm = kNaN;           // |[alpha V + sqrtC Y; -sqrtC Z]|
  double max_certificate = kNaN;      // max agent certificate of the sweep
  long inner_iterations_total = 0;
};

struct RunHooks {
  const ProblemInstance* problem = nullptr;
  const ReferenceSolution* reference = nullptr;
  bool with_lyapunov = true;
  std::function<void(const IterationMetrics&)> sink;
};

struct RunResult {
  std::vector<IterationMetrics> trajectory;
  AlgorithmState final_state;
  bool completed = false;       // ran to max iterations or hit the error target
  bool reached_target = false;
  long iterations_to_target = -1;
  std::string failure;          // nonempty when a resolvent sweep failed
  int failed_agent = -1;

  std::vector<double> solution_errors() const;
};

// Executes the configured method to max_iterations or until the solution
// error falls to config.error_target (when a reference is supplied).
// Deterministic for a fixed config. A sweep failure terminates the run with
// the partial trajectory and a failure record.
RunResult run(const RunConfig& config, const RunHooks& hooks = {});

// Metrics of a standalone iterate (also used for the k = 0 row).
IterationMetrics evaluate_iterate(long k, const Matrix& z, const RunHooks& hooks);

}  // namespace pcor
