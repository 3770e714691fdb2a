#pragma once

#include "pcor/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace pcor {

// Axis-aligned box; entries of lower/upper may be -inf/+inf. Also models
// product cones such as R_+^q (lower 0, upper +inf).
struct Box {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  static Box bounded(Vector lo, Vector hi);
  static Box whole_space(int n);
  static Box nonnegative(int n);
  // Cartesian product of two boxes.
  static Box concat(const Box& a, const Box& b);

  bool contains(const Vector& z, double tol = 0.0) const;
  Vector project(const Vector& z) const;
  // Projection of w onto the normal cone of the box at z (z must lie in the
  // box; boundary membership is decided by exact comparison, which is the
  // right convention for points produced by project()).
  Vector project_normal_cone(const Vector& z, const Vector& w) const;
};

enum class OperatorKind {
  AffineMonotone,        // T(z) = Az - b, symmetric part of A PSD
  BoxNormalCone,         // T(z) = N_box(z)
  SaddleLagrangian,      // T = (grad_x L, -grad_y L) + N_box for a convex-concave L
  SubdifferentialConvex, // T = subgradient of a convex function
  SumSmoothBox,          // generic single-valued monotone map plus a box normal cone
};

// Maximal monotone operator in the form T(z) = F(z) + N_box(z) with F a
// single-valued monotone map (possibly zero) and the box optional.
struct MonotoneOperator {
  int dim = 0;
  OperatorKind kind = OperatorKind::SumSmoothBox;
  std::function<Vector(const Vector&)> smooth;  // F; empty means F = 0
  std::optional<Matrix> affine_matrix;          // set when F(z) = A z - b
  std::optional<Vector> affine_offset;
  std::optional<Box> box;

  // Point-selection oracle: F(z), a member of T(z) for z in the domain.
  Vector select(const Vector& z) const;
  bool in_domain(const Vector& z, double tol = 1e-9) const;
  bool is_affine() const { return affine_matrix.has_value(); }
  // Closed-form resolvent exists for a pure projection (F = 0) or an affine
  // map without a box; affine-plus-box has none.
  bool has_closed_form_resolvent() const;
};

MonotoneOperator make_zero_operator(int dim);
MonotoneOperator make_affine_operator(Matrix a, Vector b);
MonotoneOperator make_affine_box_operator(Matrix a, Vector b, Box box);
MonotoneOperator make_box_normal_cone(Box box);
MonotoneOperator make_smooth_box_operator(int dim, std::function<Vector(const Vector&)> f,
                                          std::optional<Box> box,
                                          OperatorKind kind = OperatorKind::SumSmoothBox);

class InfeasibleCandidateError : public NumericalError {
 public:
  explicit InfeasibleCandidateError(const std::string& what) : NumericalError(what) {}
};

// dist(0, T(candidate) + (candidate - z_hat)/alpha), computed through the
// normal-cone projection: with w = -F(candidate) - (candidate - z_hat)/alpha,
// the distance is |w - Proj_{N(candidate)}(w)|. Throws
// InfeasibleCandidateError when the candidate is outside the operator domain.
double s_t_distance(const MonotoneOperator& op, double alpha, const Vector& z_hat,
                    const Vector& candidate);

// Minimal-norm element of T(candidate) + (candidate - z_hat)/alpha realizing
// the distance above.
Vector s_t_min_selection(const MonotoneOperator& op, double alpha, const Vector& z_hat,
                         const Vector& candidate);

// Precision sequence families. Power: c/(k+1)^p (summable iff p > 1);
// Geometric: c*q^k (summable iff |q| < 1). Custom schedules are accepted but
// their summability cannot be checked.
struct PrecisionSchedule {
  enum class Family { Zero, Power, Geometric, Custom };
  enum class Summability { Yes, No, Unknown };

  Family family = Family::Zero;
  double scale = 0.0;     // c
  double exponent = 0.0;  // p (Power) or q (Geometric)
  std::function<double(long)> custom;

  double value(long k) const;
  Summability summable() const;
  std::string describe() const;

  static PrecisionSchedule zero();
  static PrecisionSchedule power(double c, double p);
  static PrecisionSchedule geometric(double c, double q);
  static PrecisionSchedule custom_schedule(std::function<double(long)> f);
};

enum class CriterionMode {
  Exact,             // certificate <= exact_certificate every step
  AbsoluteSummable,  // certificate <= eps_k / alpha, sum eps_k < inf
  RelativeSummable,  // certificate <= (delta_k / alpha) |z_new - z_prev|, sum delta_k < inf
};

struct InexactnessCriterion {
  CriterionMode mode = CriterionMode::Exact;
  PrecisionSchedule schedule;
  // Realization of the exact case: the certificate threshold standing in for
  // a zero error bound.
  double exact_certificate = 1e-12;

  static InexactnessCriterion exact(double certificate = 1e-12);
  static InexactnessCriterion absolute_summable(PrecisionSchedule s);
  static InexactnessCriterion relative_summable(PrecisionSchedule s);

  bool is_exact() const { return mode == CriterionMode::Exact; }
  // Allowed certificate at outer index k; step_norm is |z_new - z_prev| and
  // is only consulted in relative mode.
  double bound(long k, double alpha, double step_norm = 0.0) const;
  // False when a summable-family criterion is configured with a non-summable
  // schedule. Custom schedules return true with `warning` set.
  bool validate(std::string* warning = nullptr) const;
};

struct ResolventQuery {
  double alpha = 1.0;
  Vector input_point;                     // the point prox_{alpha T} is evaluated at
  InexactnessCriterion criterion;
  long iteration_index = 0;               // k, for schedule lookup
  std::optional<Vector> previous_iterate; // required for relative mode
};

struct ResolventResult {
  Vector point;
  double certificate = 0.0;  // measured dist(0, T(point) + (point - z_hat)/alpha)
  // e with |e| <= alpha * certificate such that point = prox_{alpha T}(z_hat + e).
  Vector residual_vector;
  long inner_iterations = 0;
  bool converged = true;
  double gamma_used = 0.0;   // inner-solver step actually used (0 for closed forms)
};

struct CriterionCheck {
  bool pass = false;
  double margin = 0.0;  // bound - certificate
  double bound = 0.0;
};

CriterionCheck check_criterion(const ResolventResult& result, const ResolventQuery& query,
                               double alpha);

// Inner-solver knobs shared by resolve() and solve_saddle().
struct SolverSettings {
  double gamma = 0.0;        // fixed step; 0 derives alpha/(1 + alpha*Lhat) from a sampled estimate
  bool backtracking = true;  // halve the step when the certificate diverges
  long max_iterations = 400000;
  std::uint64_t probe_seed = 9001;  // Lipschitz sampling stream
};

// Evaluates prox_{alpha T}(input) under the query's criterion: closed form
// when the operator admits one, projected primal-dual gradient iterations
// otherwise. The certificate is always measured, never assumed.
ResolventResult resolve(const MonotoneOperator& op, const ResolventQuery& query,
                        const SolverSettings& settings = {}, const Vector* warm_start = nullptr);

}  // namespace pcor
