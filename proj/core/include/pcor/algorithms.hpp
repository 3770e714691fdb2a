#pragma once

#include "pcor/graph.hpp"
#include "pcor/operators.hpp"

#include <string>
#include <vector>

namespace pcor {

enum class Method {
  ProximalCorrection,    // proximal point sweep with the cumulative consensus correction
  ProximalCorrectionZY,  // same algorithm in its (Z, Y) primal-dual form
  Dppa,                  // plain distributed proximal point with diminishing penalties
};

// Diminishing DPPA penalties alpha_k = alpha0 / (k+1)^exponent.
struct PenaltySchedule {
  double alpha0 = 1.0;
  double exponent = 0.6;
  double value(long k) const;
  // Required range: diminishing but non-summable, i.e. 0 < exponent <= 1.
  bool diminishing_non_summable() const;
};

struct RunConfig {
  Method method = Method::ProximalCorrection;
  MixingPair mixing;
  std::vector<MonotoneOperator> operators;
  InexactnessCriterion criterion;
  double alpha = 1.0;         // constant penalty (ProximalCorrection forms)
  PenaltySchedule dppa;       // penalty schedule (Dppa)
  long max_iterations = 1000;
  double error_target = 0.0;  // 0 disables error-based stopping
  Matrix initial_z;           // N x n, one row per agent
  SolverSettings solver;

  int num_agents() const { return static_cast<int>(initial_z.rows()); }
  int ambient_dim() const { return static_cast<int>(initial_z.cols()); }
  void validate() const;  // throws ConfigError on inconsistency
};

// Collective iterate. Z is the current iterate Z^k, Zprev the previous one,
// V the operator selection with alpha V^k = (input - Z^k), and Y the running
// sum Y^k = sum_{t<=k} sqrtC Z^t (state of the (Z,Y) form, bookkeeping for
// the recursive form).
struct AlgorithmState {
  Matrix Z, Zprev, V, Y;
  long k = 0;
  double alpha = 0.0;

  std::vector<double> gamma_hint;         // per-agent inner step carried across sweeps
  std::vector<double> last_certificates;  // per-agent certificate of the last sweep
  long inner_iterations_last = 0;
  bool step_ok = true;
  int failed_agent = -1;
  std::string failure;

  double max_certificate() const;
};

// Z^1 = prox_{alpha T}(W Z^0) row-wise, V^1 = (W Z^0 - Z^1)/alpha, k = 1.
AlgorithmState pc_init(const RunConfig& config);

// Recursive form (exact criterion only):
//   Zhat = (I+W) Z^{k+1} - W~ Z^k + alpha V^{k+1}
//   Z^{k+2} = prox_{alpha T}(Zhat),  V^{k+2} = (Zhat - Z^{k+2})/alpha.
AlgorithmState pc_step(const AlgorithmState& state, const RunConfig& config);

// (Z, Y) form, valid for exact and inexact criteria:
//   Z^{k+1} ~= prox_{alpha T}(W~ Z^k - sqrtC Y^k),  Y^{k+1} = Y^k + sqrtC Z^{k+1},
//   V^{k+1} = (W~ Z^k - sqrtC Y^k - Z^{k+1})/alpha.
AlgorithmState pc_step_zy(const AlgorithmState& state, const RunConfig& config);

// Test oracle: next iterate from the whole history via the cumulative form
//   Z^{next} = prox_{alpha T}(W~ Z^{last} + sum_t (W - W~) Z^t).
// Rejects non-exact criteria.
Matrix cumulative_reference_step(const std::vector<Matrix>& z_history, const RunConfig& config);

// DPPA start state (k = 0, no resolvent applied).
AlgorithmState dppa_init(const RunConfig& config);

// Z^{k+1} = prox_{alpha_k T}(W~ Z^k) row-wise with exact resolvents.
AlgorithmState dppa_step(const AlgorithmState& state, const RunConfig& config);

}  // namespace pcor
