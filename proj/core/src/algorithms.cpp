#include "pcor/algorithms.hpp"

#include <cmath>

namespace pcor {

double PenaltySchedule::value(long k) const {
  return alpha0 / std::pow(static_cast<double>(k) + 1.0, exponent);
}

bool PenaltySchedule::diminishing_non_summable() const {
  return alpha0 > 0.0 && exponent > 0.0 && exponent <= 1.0;
}

void RunConfig::validate() const {
  const int n = mixing.size();
  if (n <= 0) throw ConfigError("run config: empty mixing pair");
  if (static_cast<int>(operators.size()) != n)
    throw ConfigError("run config: operator count does not match the network size");
  if (initial_z.rows() != n) throw ConfigError("run config: initial iterate has wrong row count");
  for (int i = 0; i < n; ++i)
    if (operators[static_cast<size_t>(i)].dim != initial_z.cols())
      throw ConfigError("run config: operator dimension mismatch at agent " + std::to_string(i + 1));
  if (max_iterations < 1) throw ConfigError("run config: max_iterations must be at least 1");
  if (method == Method::Dppa) {
    if (!dppa.diminishing_non_summable())
      throw ConfigError("run config: DPPA penalty schedule must be diminishing and non-summable "
                        "(alpha0 > 0, 0 < exponent <= 1)");
    if (!criterion.is_exact()) throw ConfigError("run config: DPPA uses exact resolvents");
  } else {
    if (alpha <= 0) throw ConfigError("run config: alpha must be positive");
  }
  // A non-summable precision schedule is allowed to run (it is the standard
  // convergence counterexample); summability is surfaced as a warning by the
  // harness, not enforced here.
}

double AlgorithmState::max_certificate() const {
  double m = 0.0;
  for (double c : last_certificates) m = std::max(m, c);
  return m;
}

namespace {

// One row-wise resolvent sweep over all agents. On resolvent failure the
// sweep stops and the failure is recorded on the state flags.
void resolve_rows(const RunConfig& config, const Matrix& input, long schedule_index, double alpha,
                  const Matrix* previous, const Matrix* warm, AlgorithmState& state, Matrix& out) {
  const int n = config.num_agents();
  out.resize(input.rows(), input.cols());
  state.inner_iterations_last = 0;
  state.step_ok = true;
  state.failed_agent = -1;
  state.failure.clear();
  if (state.gamma_hint.size() != static_cast<size_t>(n)) state.gamma_hint.assign(static_cast<size_t>(n), 0.0);
  state.last_certificates.assign(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    ResolventQuery query;
    query.alpha = alpha;
    query.input_point = input.row(i).transpose();
    query.criterion = config.criterion;
    query.iteration_index = schedule_index;
    if (previous) query.previous_iterate = previous->row(i).transpose();
    SolverSettings settings = config.solver;
    if (state.gamma_hint[static_cast<size_t>(i)] > 0) settings.gamma = state.gamma_hint[static_cast<size_t>(i)];
    Vector warm_row;
    const Vector* warm_ptr = nullptr;
    if (warm) {
      warm_row = warm->row(i).transpose();
      warm_ptr = &warm_row;
    }
    const ResolventResult r = resolve(config.operators[static_cast<size_t>(i)], query, settings, warm_ptr);
    out.row(i) = r.point.transpose();
    state.inner_iterations_last += r.inner_iterations;
    state.last_certificates[static_cast<size_t>(i)] = r.certificate;
    if (r.gamma_used > 0) state.gamma_hint[static_cast<size_t>(i)] = r.gamma_used;
    if (!r.converged) {
      state.step_ok = false;
      state.failed_agent = i;
      state.failure = "agent " + std::to_string(i + 1) + ": resolvent failed at iteration " +
                      std::to_string(schedule_index) + " (best certificate " +
                      std::to_string(r.certificate) + ")";
      return;
    }
  }
}

}  // namespace

AlgorithmState pc_init(const RunConfig& config) {
  config.validate();
  AlgorithmState state;
  state.alpha = config.alpha;
  state.Zprev = config.initial_z;
  const Matrix input = config.mixing.W * config.initial_z;
  resolve_rows(config, input, /*schedule_index=*/0, config.alpha, &config.initial_z,
               &config.initial_z, state, state.Z);
  state.V = (input - state.Z) / config.alpha;
  state.Y = config.mixing.sqrtC * (config.initial_z + state.Z);
  state.k = 1;
  return state;
}

AlgorithmState pc_step(const AlgorithmState& state, const RunConfig& config) {
  if (!config.criterion.is_exact())
    throw std::invalid_argument("pc_step implements the recursive form, which holds for exact "
                                "resolvents only; use pc_step_zy for inexact criteria");
  const int n = config.num_agents();
  AlgorithmState next = state;
  const Matrix z_hat = state.Z + config.mixing.W * state.Z - config.mixing.Wt * state.Zprev +
                       config.alpha * state.V;
  next.Zprev = state.Z;
  resolve_rows(config, z_hat, state.k, config.alpha, &state.Z, &state.Z, next, next.Z);
  next.V = (z_hat - next.Z) / config.alpha;
  next.Y = state.Y + config.mixing.sqrtC * next.Z;
  next.k = state.k + 1;
  return next;
}

AlgorithmState pc_step_zy(const AlgorithmState& state, const RunConfig& config) {
  AlgorithmState next = state;
  const Matrix input = config.mixing.Wt * state.Z - config.mixing.sqrtC * state.Y;
  next.Zprev = state.Z;
  resolve_rows(config, input, state.k, config.alpha, &state.Z, &state.Z, next, next.Z);
  next.V = (input - next.Z) / config.alpha;
  next.Y = state.Y + config.mixing.sqrtC * next.Z;
  next.k = state.k + 1;
  return next;
}

Matrix cumulative_reference_step(const std::vector<Matrix>& z_history, const RunConfig& config) {
  if (!config.criterion.is_exact())
    throw std::invalid_argument("cumulative_reference_step requires the exact criterion");
  if (z_history.empty()) throw std::invalid_argument("cumulative_reference_step needs Z^0");
  const Matrix diff = config.mixing.W - config.mixing.Wt;
  Matrix correction = Matrix::Zero(z_history[0].rows(), z_history[0].cols());
  for (const Matrix& z : z_history) correction += diff * z;
  const Matrix input = config.mixing.Wt * z_history.back() + correction;
  AlgorithmState scratch;
  Matrix out;
  resolve_rows(config, input, static_cast<long>(z_history.size()) - 1, config.alpha,
               &z_history.back(), &z_history.back(), scratch, out);
  if (!scratch.step_ok) throw NumericalError("cumulative reference step: " + scratch.failure);
  return out;
}

AlgorithmState dppa_init(const RunConfig& config) {
  config.validate();
  AlgorithmState state;
  state.alpha = config.dppa.value(0);
  state.Z = config.initial_z;
  state.Zprev = config.initial_z;
  state.V = Matrix::Zero(config.initial_z.rows(), config.initial_z.cols());
  state.Y = config.mixing.sqrtC * config.initial_z;
  state.k = 0;
  return state;
}

AlgorithmState dppa_step(const AlgorithmState& state, const RunConfig& config) {
  const double alpha_k = config.dppa.value(state.k);
  AlgorithmState next = state;
  next.alpha = alpha_k;
  const Matrix input = config.mixing.Wt * state.Z;
  next.Zprev = state.Z;
  resolve_rows(config, input, state.k, alpha_k, &state.Z, &state.Z, next, next.Z);
  next.V = (input - next.Z) / alpha_k;
  next.Y = state.Y + config.mixing.sqrtC * next.Z;
  next.k = state.k + 1;
  return next;
}

}  // namespace pcor
