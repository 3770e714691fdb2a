#include "pcor/run.hpp"

#include <cmath>

namespace pcor {

namespace {

double solution_error_of(const Matrix& z, const RunHooks& hooks) {
  if (!hooks.problem || !hooks.reference) return kNaN;
  const ReferenceSolution& ref = *hooks.reference;
  if (hooks.problem->name() == "log_allocation") {
    const Vector x = z.col(0);
    return (x.array() - ref.x_star[0]).matrix().norm();
  }
  return (z - Vector::Ones(z.rows()) * ref.z_star.transpose()).norm();
}

double consensus_of(const Matrix& z, const RunHooks& hooks) {
  const int pd = hooks.problem ? hooks.problem->primal_dim() : static_cast<int>(z.cols());
  const Matrix x = z.leftCols(pd);
  const Vector mean = x.colwise().mean().transpose();
  return (x - Vector::Ones(x.rows()) * mean.transpose()).norm();
}

}  // namespace

IterationMetrics evaluate_iterate(long k, const Matrix& z, const RunHooks& hooks) {
  IterationMetrics m;
  m.k = k;
  m.solution_error = solution_error_of(z, hooks);
  m.consensus_violation = consensus_of(z, hooks);
  if (hooks.problem) {
    const double coupled = hooks.problem->coupled_violation_rows(z);
    m.constraint_violation = m.consensus_violation + coupled;
  }
  return m;
}

std::vector<double> RunResult::solution_errors() const {
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (const auto& m : trajectory) out.push_back(m.solution_error);
  return out;
}

RunResult run(const RunConfig& config, const RunHooks& hooks) {
  config.validate();
  RunResult result;

  std::optional<PqPair> pq;
  std::optional<XiPoint> xi_star;
  const bool pc_family = config.method != Method::Dppa;
  if (pc_family && hooks.with_lyapunov && hooks.reference) {
    pq = PqPair::from_mixing(config.mixing);
    xi_star = lift_solution(hooks.reference->z_star, hooks.reference->v_star, config.mixing,
                            config.alpha);
  }

  const auto emit = [&](const AlgorithmState* state, const Matrix& z, long k) {
    IterationMetrics m = evaluate_iterate(k, z, hooks);
    if (state) {
      m.max_certificate = state->max_certificate();
      m.inner_iterations_total = state->inner_iterations_last;
      if (pq && xi_star) {
        const XiPoint xi{state->Z, state->Y};
        m.lyapunov = pq->p2_norm_sq(xi - *xi_star);
        const Matrix omega_top = config.alpha * state->V + config.mixing.sqrtC * state->Y;
        const Matrix omega_bottom = -config.mixing.sqrtC * state->Z;
        m.omega_norm = std::sqrt(omega_top.squaredNorm() + omega_bottom.squaredNorm());
      }
    }
    result.trajectory.push_back(m);
    if (hooks.sink) hooks.sink(m);
    return m;
  };

  emit(nullptr, config.initial_z, 0);

  AlgorithmState state = pc_family ? pc_init(config) : dppa_init(config);
  if (pc_family) {
    if (!state.step_ok) {
      result.failure = state.failure;
      result.failed_agent = state.failed_agent;
      result.final_state = std::move(state);
      return result;
    }
    const IterationMetrics m = emit(&state, state.Z, state.k);
    if (config.error_target > 0 && m.solution_error <= config.error_target) {
      result.reached_target = true;
      result.iterations_to_target = state.k;
      result.completed = true;
      result.final_state = std::move(state);
      return result;
    }
  }

  const bool recursive_form =
      config.method == Method::ProximalCorrection && config.criterion.is_exact();
  while (state.k < config.max_iterations) {
    AlgorithmState next;
    if (config.method == Method::Dppa) {
      next = dppa_step(state, config);
    } else if (recursive_form) {
      next = pc_step(state, config);
    } else {
      next = pc_step_zy(state, config);
    }
    if (!next.step_ok) {
      result.failure = next.failure;
      result.failed_agent = next.failed_agent;
      result.final_state = std::move(state);  // last good state
      return result;
    }
    state = std::move(next);
    const IterationMetrics m = emit(&state, state.Z, state.k);
    if (config.error_target > 0 && m.solution_error <= config.error_target) {
      result.reached_target = true;
      result.iterations_to_target = state.k;
      break;
    }
  }

  result.completed = true;
  result.final_state = std::move(state);
  return result;
}

}  // namespace pcor
