#pragma once

#include "pcor/operators.hpp"

namespace pcor {

// Regularized inclusion behind one resolvent evaluation: find z with
//   0 in F(z) + N_box(z) + (z - input)/alpha.
// For a saddle operator this is the strongly convex-concave subproblem with
// proximal coupling to the base point.
struct SaddleSubproblem {
  const MonotoneOperator& op;
  double alpha;
  Vector input;
};

// Allowed certificate at a candidate point (constant for exact/absolute
// criteria, proportional to |z - z_prev| for the relative one).
using CertificateTarget = std::function<double(const Vector&)>;

// Projected primal-dual gradient iterations
//   z <- Proj_box(z - gamma * (F(z) + (z - input)/alpha)),
// stopping at the first iterate whose measured certificate meets the target.
// The certificate is evaluated every iteration. When the certificate grows
// 10x over a 50-iteration window (or turns non-finite) the step is halved and
// the iteration restarts from the best point seen so far.
ResolventResult solve_saddle(const SaddleSubproblem& sub, const SolverSettings& settings,
                             const CertificateTarget& target, const Vector* warm_start = nullptr);

class NoClosedFormError : public NumericalError {
 public:
  explicit NoClosedFormError(const std::string& what) : NumericalError(what) {}
};

// Exact resolvent for the kinds that admit one: box normal cone (projection)
// and affine map without a box (linear solve). The certificate is measured,
// not assumed zero. Affine-plus-box raises NoClosedFormError.
ResolventResult closed_form_resolvent(const MonotoneOperator& op, double alpha, const Vector& input);

// Largest sampled ratio |F(p) - F(q)| / |p - q| over 100 random pairs drawn
// near `around` inside the operator box (exact spectral norm for affine maps).
double estimate_gradient_lipschitz(const MonotoneOperator& op, const Vector& around,
                                   std::uint64_t seed);

}  // namespace pcor
