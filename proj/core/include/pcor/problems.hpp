#pragma once

#include "pcor/operators.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace pcor {

// Generic per-agent saddle operator for a local Lagrangian
//   L(x, y) = f(x) + y' h(x) + I_box(x) - I_cone(y),
// with the multiplier cone R_+^{num_inequalities} x R^{num_equalities}.
// The operator is (grad_x L, -grad_y L) plus the normal cone of box x cone.
MonotoneOperator saddle_operator(int primal_dim, int num_inequalities, int num_equalities,
                                 std::function<Vector(const Vector&)> objective_gradient,
                                 std::function<Vector(const Vector&)> constraint_value,
                                 std::function<Matrix(const Vector&)> constraint_jacobian,
                                 Box primal_box);

// N agents share a scalar decision x with linear costs a_i * x, a coupled
// QoS-style constraint sum_i(-c_i log(1+x) + b/N) <= 0 and per-agent boxes
// [i/N, 3 - i/N]. Parameters: a_i = i/N, c_i = i/(N+1), b = (N/2) log 2.
// Each agent's operator acts on (x, y) with y >= 0 the local multiplier copy.
struct LogAllocationProblem {
  int num_agents = 0;
  Vector a, c;
  double b = 0.0;
  Vector box_lower, box_upper;  // per agent

  static LogAllocationProblem make(int num_agents);
  int ambient_dim() const { return 2; }
  int primal_dim() const { return 1; }
  MonotoneOperator agent_operator(int i) const;
  // max(sum_i(-c_i log(1+x_i) + b/N), 0) for per-agent decisions x_i.
  double coupled_violation(const Vector& x_per_agent) const;
};

// Distributed quadratic program with a coupled inequality block:
//   min sum_i 0.5|A_i x - b_i|^2  s.t.  sum_i (C_i x - d_i) <= 0,  l_i <= x <= u_i.
// Seeded standard-normal data, boxes [-1,1]^p, d_i = 1 so that x = 0 is a
// strictly feasible interior point. Each agent's operator acts on (x, lambda).
struct CoupledQpProblem {
  int num_agents = 0, p = 0, q = 0;
  std::uint64_t seed = 0;
  std::vector<Matrix> A;
  std::vector<Vector> b;
  std::vector<Matrix> C;
  std::vector<Vector> d;
  std::vector<Vector> lower, upper;

  static CoupledQpProblem make(std::uint64_t seed, int num_agents, int p, int q);
  int ambient_dim() const { return p + q; }
  int primal_dim() const { return p; }
  MonotoneOperator agent_operator(int i) const;
  Matrix agent_affine_matrix(int i) const;
  Vector agent_affine_offset(int i) const;
  // |(sum_i (C_i x_i - d_i))_+|_2 for per-agent decisions x_i (rows of X).
  double coupled_violation(const Matrix& x_rows) const;
  // Box intersection across agents.
  Vector common_lower() const;
  Vector common_upper() const;
};

// Centralized solution used as the ground-truth oracle for solution errors.
struct ReferenceSolution {
  Vector z_star;       // full ambient point (x*, lambda*)
  Vector x_star;
  Vector lambda_star;
  Matrix v_star;       // N x n zero-column-sum selection, row i in T_i(z*)
  double kkt_residual = 0.0;
};

ReferenceSolution centralized_reference(const LogAllocationProblem& problem);
ReferenceSolution centralized_reference(const CoupledQpProblem& problem);

// dist(0, sum_i T_i(z*)): smooth parts summed, normal-cone freedom taken over
// the intersection box and the multiplier cone.
double aggregate_zero_distance(const LogAllocationProblem& problem, const ReferenceSolution& ref);
double aggregate_zero_distance(const CoupledQpProblem& problem, const ReferenceSolution& ref);

// Harness-facing wrapper over the bundled problem families.
struct ProblemInstance {
  std::variant<LogAllocationProblem, CoupledQpProblem> impl;

  static ProblemInstance log_allocation(int num_agents);
  static ProblemInstance coupled_qp(std::uint64_t seed, int num_agents, int p, int q);
  static ProblemInstance from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
  std::string to_json_string() const;
  static ProblemInstance from_json_string(const std::string& text, const std::string& origin);

  std::string name() const;
  int num_agents() const;
  int ambient_dim() const;
  int primal_dim() const;
  std::vector<MonotoneOperator> operators() const;
  ReferenceSolution reference() const;
  // Per-agent rows: x uniform in the agent's box (seeded), multipliers zero.
  Matrix initial_iterate(std::uint64_t seed) const;
  double coupled_violation_rows(const Matrix& z_rows) const;
};

}  // namespace pcor
