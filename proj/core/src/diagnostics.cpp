#include "pcor/diagnostics.hpp"

#include "pcor/inner_solver.hpp"
#include "pcor/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace pcor {

PqPair PqPair::from_mixing(const MixingPair& mixing) {
  PqPair pq;
  const int n = mixing.size();
  pq.p_block_ = Matrix::Identity(n, n) - mixing.C;
  pq.q_block_ = mixing.Wt;
  pq.p_block_inverse_ = pq.p_block_.partialPivLu().inverse();
  Eigen::SelfAdjointEigenSolver<Matrix> pe(0.5 * (pq.p_block_ + pq.p_block_.transpose()));
  pq.p_min_eig_ = pe.eigenvalues().minCoeff();
  pq.p_max_eig_ = pe.eigenvalues().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> qe(0.5 * (pq.q_block_ + pq.q_block_.transpose()));
  pq.q_min_eig_ = qe.eigenvalues().minCoeff();
  return pq;
}

XiPoint PqPair::apply_p_inverse(const XiPoint& xi) const { return {p_block_inverse_ * xi.Z, xi.Y}; }

double PqPair::p2_norm_sq(const XiPoint& xi) const {
  return (p_block_ * xi.Z).squaredNorm() + xi.Y.squaredNorm();
}

double PqPair::p_norm(const XiPoint& xi) const {
  const double v = (xi.Z.array() * (p_block_ * xi.Z).array()).sum() + xi.Y.squaredNorm();
  return std::sqrt(std::max(v, 0.0));
}

double PqPair::p_spectral_norm() const { return std::max(p_max_eig_, 1.0); }

double PqPair::p_inverse_spectral_norm() const {
  return p_min_eig_ > 0 ? std::max(1.0 / p_min_eig_, 1.0) : kInf;
}

double PqPair::min_eigenvalue_p() const { return std::min(p_min_eig_, 1.0); }

double PqPair::min_eigenvalue_q() const { return std::min(q_min_eig_, 1.0); }

double PqPair::p2_minus_q2_min_eigenvalue() const {
  const Matrix d = p_block_ * p_block_ - q_block_ * q_block_;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (d + d.transpose()));
  return std::min(eig.eigenvalues().minCoeff(), 0.0);
}

double phi_distance(const XiPoint& xi, const std::vector<MonotoneOperator>& ops,
                    const MixingPair& mixing, double alpha) {
  if (alpha <= 0) throw std::invalid_argument("alpha must be positive");
  const Matrix g = mixing.sqrtC * xi.Y;
  double first_sq = 0.0;
  for (int i = 0; i < xi.Z.rows(); ++i) {
    const MonotoneOperator& op = ops[static_cast<size_t>(i)];
    const Vector z = xi.Z.row(i).transpose();
    if (op.box && !op.box->contains(z, 1e-12))
      throw InfeasibleCandidateError("phi_distance: row " + std::to_string(i + 1) +
                                     " outside the operator domain");
    const Vector v = alpha * op.select(z) + g.row(i).transpose();
    if (op.box) {
      const Vector w = -v;
      const Vector pn = op.box->project_normal_cone(z, w);
      first_sq += (w - pn).squaredNorm();
    } else {
      first_sq += v.squaredNorm();
    }
  }
  const double second_sq = (mixing.sqrtC * xi.Z).squaredNorm();
  return std::sqrt(first_sq + second_sq);
}

XiPoint lift_solution(const Vector& z_star, const Matrix& v_star, const MixingPair& mixing,
                      double alpha) {
  const Vector colsum = v_star.colwise().sum().transpose();
  if (colsum.norm() > 1e-8)
    throw std::invalid_argument("lift_solution: selection columns do not sum to zero (|1'V| = " +
                                std::to_string(colsum.norm()) + "); no lift exists");
  const int n = mixing.size();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (mixing.C + mixing.C.transpose()));
  const Vector vals = eig.eigenvalues();
  const Matrix& u = eig.eigenvectors();
  Vector inv_sqrt = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    if (vals[i] > 1e-14) inv_sqrt[i] = 1.0 / std::sqrt(vals[i]);
  const Matrix pinv_sqrt = u * inv_sqrt.asDiagonal() * u.transpose();
  XiPoint xi;
  xi.Z = Vector::Ones(n) * z_star.transpose();
  xi.Y = pinv_sqrt * (-alpha * v_star);
  return xi;
}

XiPoint prox_p_phi(const XiPoint& input, const std::vector<MonotoneOperator>& ops,
                   const MixingPair& mixing, double alpha, double target_certificate,
                   const SolverSettings& solver) {
  const int n = mixing.size();
  const Matrix p_block = Matrix::Identity(n, n) - mixing.C;
  const Matrix sweep_input = p_block * input.Z - mixing.sqrtC * input.Y;
  XiPoint out;
  out.Z.resize(input.Z.rows(), input.Z.cols());
  for (int i = 0; i < n; ++i) {
    ResolventQuery query;
    query.alpha = alpha;
    query.input_point = sweep_input.row(i).transpose();
    query.criterion = InexactnessCriterion::exact(target_certificate);
    const ResolventResult r = resolve(ops[static_cast<size_t>(i)], query, solver);
    if (!r.converged)
      throw NumericalError("prox_p_phi: resolvent at row " + std::to_string(i + 1) +
                           " did not reach certificate " + std::to_string(target_certificate));
    out.Z.row(i) = r.point.transpose();
  }
  out.Y = input.Y + mixing.sqrtC * out.Z;
  return out;
}

XiPoint psi_displacement(const XiPoint& xi, const std::vector<MonotoneOperator>& ops,
                         const MixingPair& mixing, double alpha, double target_certificate) {
  return xi - prox_p_phi(xi, ops, mixing, alpha, target_certificate);
}

namespace {

// Per-entry cone of normal-cone freedom at z (0 interior, -1 lower bound,
// +1 upper bound, 2 pinned/free line).
Matrix cone_pattern(const std::vector<MonotoneOperator>& ops, const Matrix& z) {
  Matrix pattern = Matrix::Zero(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i) {
    const MonotoneOperator& op = ops[static_cast<size_t>(i)];
    if (!op.box) continue;
    for (int j = 0; j < z.cols(); ++j) {
      const bool at_lower = std::isfinite(op.box->lower[j]) && z(i, j) <= op.box->lower[j];
      const bool at_upper = std::isfinite(op.box->upper[j]) && z(i, j) >= op.box->upper[j];
      if (at_lower && at_upper)
        pattern(i, j) = 2;
      else if (at_lower)
        pattern(i, j) = -1;
      else if (at_upper)
        pattern(i, j) = 1;
    }
  }
  return pattern;
}

Matrix project_pattern(const Matrix& m, const Matrix& pattern) {
  Matrix out = m;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if (pattern(i, j) == 0.0)
        out(i, j) = 0.0;
      else if (pattern(i, j) == -1.0)
        out(i, j) = std::min(m(i, j), 0.0);
      else if (pattern(i, j) == 1.0)
        out(i, j) = std::max(m(i, j), 0.0);
    }
  return out;
}

}  // namespace

double s_phi_distance(const XiPoint& xi_next, const XiPoint& xi_prev,
                      const std::vector<MonotoneOperator>& ops, const MixingPair& mixing,
                      double alpha) {
  const int n = mixing.size();
  const Matrix p_block = Matrix::Identity(n, n) - mixing.C;
  const Matrix k_inv = p_block.partialPivLu().inverse();

  Matrix smooth(xi_next.Z.rows(), xi_next.Z.cols());
  for (int i = 0; i < n; ++i)
    smooth.row(i) = ops[static_cast<size_t>(i)].select(xi_next.Z.row(i).transpose()).transpose();

  const Matrix base = alpha * smooth + mixing.sqrtC * xi_next.Y + p_block * xi_next.Z -
                      mixing.Wt * xi_prev.Z;
  const Matrix pattern = cone_pattern(ops, xi_next.Z);

  // minimize |K (base + M)|_F over the product cone; projected gradient with
  // the exact Lipschitz step of the quadratic.
  const double lip = std::pow(spectral_radius(k_inv), 2.0);
  const double step = 1.0 / lip;
  Matrix m = Matrix::Zero(base.rows(), base.cols());
  double prev_obj = kInf;
  for (int it = 0; it < 50000; ++it) {
    const Matrix r = k_inv * (base + m);
    const Matrix grad = k_inv.transpose() * r;
    m = project_pattern(m - step * grad, pattern);
    if (it % 128 == 0) {
      const double obj = (k_inv * (base + m)).squaredNorm();
      if (prev_obj - obj < 1e-18 * std::max(1.0, obj)) break;
      prev_obj = obj;
    }
  }
  const double first_sq = (k_inv * (base + m)).squaredNorm();
  const double second_sq = (xi_next.Y - mixing.sqrtC * xi_next.Z - xi_prev.Y).squaredNorm();
  return std::sqrt(first_sq + second_sq);
}

bool StepAuditReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string StepAuditReport::to_string() const {
  std::ostringstream out;
  for (const auto& c : checks)
    out << (c.pass ? "[pass] " : "[FAIL] ") << c.name << "  lhs=" << c.lhs << "  rhs=" << c.rhs
        << "\n";
  return out.str();
}

StepAuditReport audit_perturbed_step(const std::vector<MonotoneOperator>& ops,
                                     const MixingPair& mixing, double alpha,
                                     const XiPoint& xi_prev, double e_norm, std::uint64_t seed,
                                     const SolverSettings& solver) {
  const int n = mixing.size();
  const int cols = static_cast<int>(xi_prev.Z.cols());
  StepAuditReport report;

  // Exact sweep from xi_prev.
  const Matrix sweep_input = mixing.Wt * xi_prev.Z - mixing.sqrtC * xi_prev.Y;
  Matrix z_exact(n, cols);
  for (int i = 0; i < n; ++i) {
    ResolventQuery query;
    query.alpha = alpha;
    query.input_point = sweep_input.row(i).transpose();
    query.criterion = InexactnessCriterion::exact(1e-13);
    const ResolventResult r = resolve(ops[static_cast<size_t>(i)], query, solver);
    if (!r.converged) throw NumericalError("audit: exact resolvent failed at row " + std::to_string(i + 1));
    z_exact.row(i) = r.point.transpose();
  }

  // Error injection that points inward at active bounds, so the perturbed
  // iterate stays in the operator domain.
  Rng rng(seed);
  Matrix dir(n, cols);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cols; ++j) dir(i, j) = rng.normal();
  const Matrix pattern = cone_pattern(ops, z_exact);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cols; ++j) {
      if (pattern(i, j) == -1.0)
        dir(i, j) = std::abs(dir(i, j));
      else if (pattern(i, j) == 1.0)
        dir(i, j) = -std::abs(dir(i, j));
      else if (pattern(i, j) == 2.0)
        dir(i, j) = 0.0;
    }
  const Matrix e = e_norm / dir.norm() * dir;
  report.injected_norm = e.norm();

  XiPoint xi_next;
  xi_next.Z = z_exact + e;
  xi_next.Y = xi_prev.Y + mixing.sqrtC * xi_next.Z;

  // Lifted step through the P^{-1}Q route (fresh resolvent solve).
  const XiPoint pq_point = PqPair::from_mixing(mixing).apply_p_inverse(
      XiPoint{mixing.Wt * xi_prev.Z, xi_prev.Y});
  const XiPoint prox_point = prox_p_phi(pq_point, ops, mixing, alpha, 1e-13, solver);

  XiPoint e_lift;
  e_lift.Z = e;
  e_lift.Y = mixing.sqrtC * e;

  const double rho_ic = spectral_radius(Matrix::Identity(n, n) + mixing.C);
  const PqPair pq = PqPair::from_mixing(mixing);

  double dist_st_sq = 0.0;
  for (int i = 0; i < n; ++i)
    dist_st_sq += std::pow(s_t_distance(ops[static_cast<size_t>(i)], alpha,
                                        sweep_input.row(i).transpose(),
                                        xi_next.Z.row(i).transpose()),
                           2.0);
  const double dist_st = std::sqrt(dist_st_sq);
  const double dist_sphi = s_phi_distance(xi_next, xi_prev, ops, mixing, alpha);
  report.s_t_distance_value = dist_st;
  report.s_phi_distance_value = dist_sphi;

  const auto add = [&](const std::string& name, double lhs, double rhs) {
    report.checks.push_back({name, lhs, rhs, lhs <= rhs});
  };
  add("lifted_step_identity", (xi_next - (prox_point + e_lift)).norm(), 1e-7);
  add("lifted_error_norm", e_lift.norm(), rho_ic * e.norm());
  add("s_phi_vs_s_t", dist_sphi, pq.p_inverse_spectral_norm() * alpha * dist_st + 1e-9);
  add("prox_error_vs_s_phi", (xi_next - prox_point).norm(), dist_sphi + 1e-9);
  add("absolute_criterion_transfer", e_lift.norm(), rho_ic * alpha * dist_st + 1e-12);
  return report;
}

RateFit rate_fit(const std::vector<double>& errors, std::size_t begin, std::size_t end) {
  if (begin >= end || end > errors.size())
    throw std::invalid_argument("rate_fit: empty or out-of-range window");
  const std::size_t m = end - begin;
  if (m < 2) throw std::invalid_argument("rate_fit: window needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const double e = errors[i];
    if (!(e > 0.0) || !std::isfinite(e))
      throw std::invalid_argument("rate_fit: window contains zeros/NaNs");
    const double x = static_cast<double>(i);
    const double y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / m;
  for (std::size_t i = begin; i < end; ++i) {
    const double y = std::log(errors[i]);
    const double fit = intercept + slope * static_cast<double>(i);
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - mean) * (y - mean);
  }
  RateFit out;
  out.theta_hat = std::exp(slope);
  out.r_squared = ss_tot > 1e-30 ? 1.0 - ss_res / ss_tot : (ss_res < 1e-20 ? 1.0 : 0.0);
  out.contraction = out.theta_hat < 1.0;
  return out;
}

}  // namespace pcor
