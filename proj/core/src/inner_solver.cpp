#include "pcor/inner_solver.hpp"

#include "pcor/rng.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace pcor {

namespace {

Vector finish(const MonotoneOperator& op, double alpha, const Vector& input, const Vector& point) {
  return alpha * s_t_min_selection(op, alpha, input, point);
}

// History window for the divergence check.
class CertWindow {
 public:
  void push(double c) {
    buf_[head_ % kSize] = c;
    ++head_;
  }
  bool full() const { return head_ >= kSize; }
  double oldest() const { return buf_[head_ % kSize]; }
  void clear() { head_ = 0; }

 private:
  static constexpr int kSize = 50;
  double buf_[kSize] = {};
  long head_ = 0;
};

}  // namespace

double estimate_gradient_lipschitz(const MonotoneOperator& op, const Vector& around,
                                   std::uint64_t seed) {
  if (!op.smooth) return 0.0;
  if (op.affine_matrix) {
    Eigen::JacobiSVD<Matrix> svd(*op.affine_matrix);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  }
  const int n = op.dim;
  Vector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const double c = around[i];
    const double r = 1.0 + std::abs(c);
    double l = c - r, u = c + r;
    if (op.box) {
      l = std::max(l, op.box->lower[i]);
      u = std::min(u, op.box->upper[i]);
      if (!(l < u)) {  // pinned or degenerate coordinate, probe a thin slab
        l = op.box->lower[i];
        u = std::min(op.box->upper[i], l + 1e-6);
      }
    }
    lo[i] = l;
    hi[i] = u;
  }
  Rng rng(seed);
  double best = 0.0;
  Vector p(n), q(n);
  for (int trial = 0; trial < 100; ++trial) {
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform(lo[i], hi[i]);
      q[i] = rng.uniform(lo[i], hi[i]);
    }
    const double dz = (p - q).norm();
    if (dz < 1e-12) continue;
    best = std::max(best, (op.smooth(p) - op.smooth(q)).norm() / dz);
  }
  return best;
}

ResolventResult closed_form_resolvent(const MonotoneOperator& op, double alpha, const Vector& input) {
  if (alpha <= 0) throw std::invalid_argument("alpha must be positive");
  if (static_cast<int>(input.size()) != op.dim)
    throw std::invalid_argument("resolvent input has wrong size");
  ResolventResult r;
  if (!op.smooth) {
    r.point = op.box ? op.box->project(input) : input;
  } else if (op.is_affine() && !op.box) {
    const int n = op.dim;
    const Matrix lhs = Matrix::Identity(n, n) + alpha * (*op.affine_matrix);
    r.point = lhs.partialPivLu().solve(input + alpha * (*op.affine_offset));
  } else {
    throw NoClosedFormError("no closed-form resolvent for this operator kind; use the saddle solver");
  }
  r.certificate = s_t_distance(op, alpha, input, r.point);
  r.residual_vector = finish(op, alpha, input, r.point);
  r.converged = true;
  return r;
}

ResolventResult solve_saddle(const SaddleSubproblem& sub, const SolverSettings& settings,
                             const CertificateTarget& target, const Vector* warm_start) {
  const MonotoneOperator& op = sub.op;
  const double alpha = sub.alpha;
  const Vector& input = sub.input;
  if (alpha <= 0) throw std::invalid_argument("alpha must be positive");

  const auto project = [&](const Vector& z) { return op.box ? op.box->project(z) : z; };
  const auto cert_at = [&](const Vector& z) { return s_t_distance(op, alpha, input, z); };

  Vector z = project(warm_start ? *warm_start : input);
  double cert = cert_at(z);

  ResolventResult r;
  r.point = z;
  r.certificate = cert;
  if (cert <= target(z)) {
    r.residual_vector = finish(op, alpha, input, z);
    r.converged = true;
    r.gamma_used = settings.gamma;
    return r;
  }

  double gamma = settings.gamma;
  if (gamma <= 0) {
    const double lhat = estimate_gradient_lipschitz(op, z, settings.probe_seed);
    gamma = alpha / (1.0 + alpha * lhat);
  }

  Vector best = z;
  double best_cert = cert;
  long last_improve = 0;
  double stall_reference = cert;
  CertWindow window;
  window.push(cert);

  const long stall_limit = 3000;
  long it = 0;
  for (; it < settings.max_iterations; ++it) {
    const Vector g = op.select(z) + (z - input) / alpha;
    z = project(z - gamma * g);
    cert = cert_at(z);

    if (cert < best_cert) {
      best = z;
      best_cert = cert;
      last_improve = it;
    }
    if (cert <= target(z)) {
      r.point = z;
      r.certificate = cert;
      r.residual_vector = finish(op, alpha, input, z);
      r.inner_iterations = it + 1;
      r.converged = true;
      r.gamma_used = gamma;
      return r;
    }

    const bool diverging = !std::isfinite(cert) || (window.full() && cert > 10.0 * window.oldest());
    if (diverging && settings.backtracking) {
      gamma *= 0.5;
      z = best;
      cert = best_cert;
      window.clear();
      last_improve = it;
      if (gamma < 1e-18) break;
      continue;
    }
    window.push(cert);

    if (it - last_improve > stall_limit) {
      // Either the step is mis-sized without tripping the 10x rule, or the
      // certificate floor is reached. Halve once; if that brings no real
      // progress by the next stall, stop.
      if (settings.backtracking && best_cert < 0.5 * stall_reference && gamma > 1e-18) {
        stall_reference = best_cert;
        gamma *= 0.5;
        z = best;
        window.clear();
        last_improve = it;
      } else {
        break;
      }
    }
  }

  r.point = best;
  r.certificate = best_cert;
  r.residual_vector = finish(op, alpha, input, best);
  r.inner_iterations = it;
  r.converged = false;
  r.gamma_used = gamma;
  return r;
}

ResolventResult resolve(const MonotoneOperator& op, const ResolventQuery& query,
                        const SolverSettings& settings, const Vector* warm_start) {
  if (query.alpha <= 0) throw std::invalid_argument("alpha must be positive");
  if (query.criterion.mode == CriterionMode::RelativeSummable && !query.previous_iterate)
    throw std::invalid_argument("relative criterion requires the previous iterate");

  CertificateTarget target;
  switch (query.criterion.mode) {
    case CriterionMode::Exact: {
      const double bound = query.criterion.exact_certificate;
      target = [bound](const Vector&) { return bound; };
      break;
    }
    case CriterionMode::AbsoluteSummable: {
      const double bound = query.criterion.bound(query.iteration_index, query.alpha);
      target = [bound](const Vector&) { return bound; };
      break;
    }
    case CriterionMode::RelativeSummable: {
      const double rate = query.criterion.schedule.value(query.iteration_index) / query.alpha;
      const Vector prev = *query.previous_iterate;
      target = [rate, prev](const Vector& z) { return rate * (z - prev).norm(); };
      break;
    }
  }

  if (op.has_closed_form_resolvent()) {
    ResolventResult r = closed_form_resolvent(op, query.alpha, query.input_point);
    r.converged = r.certificate <= target(r.point);
    return r;
  }
  SaddleSubproblem sub{op, query.alpha, query.input_point};
  return solve_saddle(sub, settings, target, warm_start);
}

}  // namespace pcor
