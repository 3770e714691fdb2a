#pragma once

#include "pcor/graph.hpp"
#include "pcor/operators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pcor {

// Stacked analysis point xi = (Z, Y). The stacked operator studied here is
//   Phi(Z, Y) = [alpha T(Z) + sqrtC Y; -sqrtC Z],
// whose zeros are exactly the lifted solutions of the network problem.
struct XiPoint {
  Matrix Z, Y;

  XiPoint() = default;
  XiPoint(Matrix z, Matrix y) : Z(std::move(z)), Y(std::move(y)) {}
  XiPoint operator-(const XiPoint& o) const { return {Z - o.Z, Y - o.Y}; }
  XiPoint operator+(const XiPoint& o) const { return {Z + o.Z, Y + o.Y}; }
  double norm() const { return std::sqrt(Z.squaredNorm() + Y.squaredNorm()); }
  double dot(const XiPoint& o) const {
    return (Z.array() * o.Z.array()).sum() + (Y.array() * o.Y.array()).sum();
  }
};

// Block preconditioners P = blkdiag(I - C, I) and Q = blkdiag(W~, I) acting
// on stacked points blockwise.
class PqPair {
 public:
  static PqPair from_mixing(const MixingPair& mixing);

  XiPoint apply_p(const XiPoint& xi) const { return {p_block_ * xi.Z, xi.Y}; }
  XiPoint apply_q(const XiPoint& xi) const { return {q_block_ * xi.Z, xi.Y}; }
  XiPoint apply_p_inverse(const XiPoint& xi) const;

  // |xi|_{P^2}^2 = |P xi|^2 (Frobenius over both blocks).
  double p2_norm_sq(const XiPoint& xi) const;
  // |xi|_P = sqrt(<xi, P xi>).
  double p_norm(const XiPoint& xi) const;

  double p_spectral_norm() const;          // |P|
  double p_inverse_spectral_norm() const;  // |P^-1|
  double min_eigenvalue_p() const;
  double min_eigenvalue_q() const;
  // Minimum eigenvalue of P^2 - Q^2 (the trailing identity blocks cancel).
  double p2_minus_q2_min_eigenvalue() const;

  const Matrix& p_block() const { return p_block_; }
  const Matrix& q_block() const { return q_block_; }

 private:
  Matrix p_block_;  // I - C
  Matrix q_block_;  // W~
  Matrix p_block_inverse_;
  double p_min_eig_ = 0.0, p_max_eig_ = 0.0, q_min_eig_ = 0.0;
};

// dist(0, Phi(xi)): first block combines row-wise normal-cone projections
// against the target -sqrtC Y, second block is |sqrtC Z|; Frobenius
// quadrature of the two. Throws if a row of Z leaves its operator's domain.
double phi_distance(const XiPoint& xi, const std::vector<MonotoneOperator>& ops,
                    const MixingPair& mixing, double alpha);

// Lifts a solution z* with zero-column-sum selection V* (rows in T_i(z*)) to
// the stacked certificate point xi* = (1 (x*)', Y*) with sqrtC Y* = -alpha V*.
// Rejects selections whose column sums exceed 1e-8.
XiPoint lift_solution(const Vector& z_star, const Matrix& v_star, const MixingPair& mixing,
                      double alpha);

// Resolvent of P^{-1} Phi in the P-inner product. Eliminating the second
// block reduces it to one plain resolvent sweep:
//   prox(zeta, eta) = (Z, eta + sqrtC Z),  Z = prox_{alpha T}((I-C) zeta - sqrtC eta).
XiPoint prox_p_phi(const XiPoint& input, const std::vector<MonotoneOperator>& ops,
                   const MixingPair& mixing, double alpha, double target_certificate = 1e-13,
                   const SolverSettings& solver = {});

// Displacement map xi - prox_p_phi(xi).
XiPoint psi_displacement(const XiPoint& xi, const std::vector<MonotoneOperator>& ops,
                         const MixingPair& mixing, double alpha, double target_certificate = 1e-13);

// dist(0, P^{-1} Phi(xi_next) + xi_next - P^{-1} Q xi_prev): the shifted
// residual of the lifted step. Normal-cone freedom is minimized exactly via
// a projected-gradient cone least squares in the (I-C)^{-1} metric.
double s_phi_distance(const XiPoint& xi_next, const XiPoint& xi_prev,
                      const std::vector<MonotoneOperator>& ops, const MixingPair& mixing,
                      double alpha);

struct AuditCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct StepAuditReport {
  std::vector<AuditCheck> checks;
  double injected_norm = 0.0;
  double s_t_distance_value = 0.0;
  double s_phi_distance_value = 0.0;
  bool all_pass() const;
  std::string to_string() const;
};

// Executes one audited transition from xi_prev: computes the exact resolvent
// of the sweep input, injects a feasibility-preserving error E of norm
// `e_norm` (seeded), and verifies the lifted-step identities:
//   (a) xi_next = prox_{P^-1 Phi}(P^-1 Q xi_prev) + (E; sqrtC E)  [residual <= 1e-7]
//       with |(E; sqrtC E)| <= rho(I+C) |E|
//   (b) s_phi distance <= |P^-1| * alpha * s_t distance + 1e-9
//   (c) |xi_next - prox| <= s_phi distance + 1e-9
// plus the absolute-criterion transfer bound.
StepAuditReport audit_perturbed_step(const std::vector<MonotoneOperator>& ops,
                                     const MixingPair& mixing, double alpha,
                                     const XiPoint& xi_prev, double e_norm, std::uint64_t seed,
                                     const SolverSettings& solver = {});

struct RateFit {
  double theta_hat = 1.0;
  double r_squared = 0.0;
  bool contraction = false;  // theta_hat < 1
};

// Least-squares slope of log(errors[k]) over [begin, end); theta_hat is the
// implied per-iteration contraction factor. Throws std::invalid_argument when
// the window contains non-positive or non-finite values.
RateFit rate_fit(const std::vector<double>& errors, std::size_t begin, std::size_t end);

}  // namespace pcor
