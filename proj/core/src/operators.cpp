#include "pcor/operators.hpp"

#include <cmath>
#include <sstream>

namespace pcor {

Box Box::bounded(Vector lo, Vector hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box bounds must have equal size");
  for (int i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw std::invalid_argument("box has lower > upper at coordinate " + std::to_string(i));
  return Box{std::move(lo), std::move(hi)};
}

Box Box::whole_space(int n) {
  return Box{Vector::Constant(n, -kInf), Vector::Constant(n, kInf)};
}

Box Box::nonnegative(int n) {
  return Box{Vector::Zero(n), Vector::Constant(n, kInf)};
}

Box Box::concat(const Box& a, const Box& b) {
  Box out;
  out.lower.resize(a.dim() + b.dim());
  out.upper.resize(a.dim() + b.dim());
  out.lower << a.lower, b.lower;
  out.upper << a.upper, b.upper;
  return out;
}

bool Box::contains(const Vector& z, double tol) const {
  for (int i = 0; i < z.size(); ++i)
    if (z[i] < lower[i] - tol || z[i] > upper[i] + tol) return false;
  return true;
}

Vector Box::project(const Vector& z) const {
  return z.cwiseMax(lower).cwiseMin(upper);
}

Vector Box::project_normal_cone(const Vector& z, const Vector& w) const {
  Vector out = Vector::Zero(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const bool at_lower = std::isfinite(lower[i]) && z[i] <= lower[i];
    const bool at_upper = std::isfinite(upper[i]) && z[i] >= upper[i];
    if (at_lower && at_upper) {
      out[i] = w[i];  // pinned coordinate, normal cone is the whole line
    } else if (at_lower) {
      out[i] = std::min(w[i], 0.0);
    } else if (at_upper) {
      out[i] = std::max(w[i], 0.0);
    }
  }
  return out;
}

Vector MonotoneOperator::select(const Vector& z) const {
  if (static_cast<int>(z.size()) != dim) throw std::invalid_argument("operator input has wrong size");
  if (!smooth) return Vector::Zero(dim);
  return smooth(z);
}

bool MonotoneOperator::in_domain(const Vector& z, double tol) const {
  if (static_cast<int>(z.size()) != dim) return false;
  return !box || box->contains(z, tol);
}

bool MonotoneOperator::has_closed_form_resolvent() const {
  if (!smooth) return true;          // pure projection (or identity)
  if (is_affine() && !box) return true;  // linear solve
  return false;
}

MonotoneOperator make_zero_operator(int dim) {
  return make_affine_operator(Matrix::Zero(dim, dim), Vector::Zero(dim));
}

MonotoneOperator make_affine_operator(Matrix a, Vector b) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw std::invalid_argument("affine operator shapes inconsistent");
  MonotoneOperator op;
  op.dim = static_cast<int>(a.rows());
  op.kind = OperatorKind::AffineMonotone;
  op.affine_matrix = a;
  op.affine_offset = b;
  if (a.squaredNorm() > 0 || b.squaredNorm() > 0) {
    op.smooth = [a = std::move(a), b = std::move(b)](const Vector& z) -> Vector { return a * z - b; };
  }
  return op;
}

MonotoneOperator make_affine_box_operator(Matrix a, Vector b, Box box) {
  MonotoneOperator op = make_affine_operator(std::move(a), std::move(b));
  if (box.dim() != op.dim) throw std::invalid_argument("box dimension mismatch");
  op.box = std::move(box);
  op.kind = OperatorKind::SumSmoothBox;
  return op;
}

MonotoneOperator make_box_normal_cone(Box box) {
  MonotoneOperator op;
  op.dim = box.dim();
  op.kind = OperatorKind::BoxNormalCone;
  op.box = std::move(box);
  return op;
}

MonotoneOperator make_smooth_box_operator(int dim, std::function<Vector(const Vector&)> f,
                                          std::optional<Box> box, OperatorKind kind) {
  MonotoneOperator op;
  op.dim = dim;
  op.kind = kind;
  op.smooth = std::move(f);
  op.box = std::move(box);
  return op;
}

namespace {

// Shared core: returns (distance, minimal-norm element of S(candidate)).
std::pair<double, Vector> s_t_core(const MonotoneOperator& op, double alpha, const Vector& z_hat,
                                   const Vector& candidate) {
  if (alpha <= 0) throw std::invalid_argument("alpha must be positive");
  if (op.box && !op.box->contains(candidate, 1e-12))
    throw InfeasibleCandidateError("candidate outside the operator domain");
  const Vector v = op.select(candidate) + (candidate - z_hat) / alpha;
  if (!op.box) return {v.norm(), v};
  const Vector w = -v;
  const Vector pn = op.box->project_normal_cone(candidate, w);
  const Vector s = pn - w;  // = v + pn, the minimal-norm member
  return {s.norm(), s};
}

}  // namespace

double s_t_distance(const MonotoneOperator& op, double alpha, const Vector& z_hat,
                    const Vector& candidate) {
  return s_t_core(op, alpha, z_hat, candidate).first;
}

Vector s_t_min_selection(const MonotoneOperator& op, double alpha, const Vector& z_hat,
                         const Vector& candidate) {
  return s_t_core(op, alpha, z_hat, candidate).second;
}

double PrecisionSchedule::value(long k) const {
  switch (family) {
    case Family::Zero: return 0.0;
    case Family::Power: return scale / std::pow(static_cast<double>(k) + 1.0, exponent);
    case Family::Geometric: return scale * std::pow(exponent, static_cast<double>(k));
    case Family::Custom: return custom ? custom(k) : 0.0;
  }
  return 0.0;
}

PrecisionSchedule::Summability PrecisionSchedule::summable() const {
  switch (family) {
    case Family::Zero: return Summability::Yes;
    case Family::Power: return scale == 0.0 || exponent > 1.0 ? Summability::Yes : Summability::No;
    case Family::Geometric:
      return scale == 0.0 || std::abs(exponent) < 1.0 ? Summability::Yes : Summability::No;
    case Family::Custom: return Summability::Unknown;
  }
  return Summability::Unknown;
}

std::string PrecisionSchedule::describe() const {
  std::ostringstream out;
  switch (family) {
    case Family::Zero: out << "0"; break;
    case Family::Power: out << scale << "/(k+1)^" << exponent; break;
    case Family::Geometric: out << scale << "*" << exponent << "^k"; break;
    case Family::Custom: out << "custom"; break;
  }
  return out.str();
}

PrecisionSchedule PrecisionSchedule::zero() { return PrecisionSchedule{}; }

PrecisionSchedule PrecisionSchedule::power(double c, double p) {
  PrecisionSchedule s;
  s.family = Family::Power;
  s.scale = c;
  s.exponent = p;
  return s;
}

PrecisionSchedule PrecisionSchedule::geometric(double c, double q) {
  PrecisionSchedule s;
  s.family = Family::Geometric;
  s.scale = c;
  s.exponent = q;
  return s;
}

PrecisionSchedule PrecisionSchedule::custom_schedule(std::function<double(long)> f) {
  PrecisionSchedule s;
  s.family = Family::Custom;
  s.custom = std::move(f);
  return s;
}

InexactnessCriterion InexactnessCriterion::exact(double certificate) {
  InexactnessCriterion c;
  c.mode = CriterionMode::Exact;
  c.schedule = PrecisionSchedule::zero();
  c.exact_certificate = certificate;
  return c;
}

InexactnessCriterion InexactnessCriterion::absolute_summable(PrecisionSchedule s) {
  InexactnessCriterion c;
  c.mode = CriterionMode::AbsoluteSummable;
  c.schedule = std::move(s);
  return c;
}

InexactnessCriterion InexactnessCriterion::relative_summable(PrecisionSchedule s) {
  InexactnessCriterion c;
  c.mode = CriterionMode::RelativeSummable;
  c.schedule = std::move(s);
  return c;
}

double InexactnessCriterion::bound(long k, double alpha, double step_norm) const {
  switch (mode) {
    case CriterionMode::Exact: return exact_certificate;
    case CriterionMode::AbsoluteSummable: return schedule.value(k) / alpha;
    case CriterionMode::RelativeSummable: return schedule.value(k) / alpha * step_norm;
  }
  return 0.0;
}

bool InexactnessCriterion::validate(std::string* warning) const {
  if (mode == CriterionMode::Exact) return true;
  switch (schedule.summable()) {
    case PrecisionSchedule::Summability::Yes: return true;
    case PrecisionSchedule::Summability::No: return false;
    case PrecisionSchedule::Summability::Unknown:
      if (warning) *warning = "custom precision schedule: summability not verified";
      return true;
  }
  return true;
}

CriterionCheck check_criterion(const ResolventResult& result, const ResolventQuery& query,
                               double alpha) {
  double step_norm = 0.0;
  if (query.criterion.mode == CriterionMode::RelativeSummable) {
    if (!query.previous_iterate)
      throw std::invalid_argument("relative criterion requires the previous iterate");
    step_norm = (result.point - *query.previous_iterate).norm();
  }
  CriterionCheck check;
  check.bound = query.criterion.bound(query.iteration_index, alpha, step_norm);
  check.margin = check.bound - result.certificate;
  check.pass = result.certificate <= check.bound;
  return check;
}

}  // namespace pcor
