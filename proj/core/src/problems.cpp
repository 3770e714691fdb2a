#include "pcor/problems.hpp"

#include "pcor/rng.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace pcor {

using nlohmann::json;

MonotoneOperator saddle_operator(int primal_dim, int num_inequalities, int num_equalities,
                                 std::function<Vector(const Vector&)> objective_gradient,
                                 std::function<Vector(const Vector&)> constraint_value,
                                 std::function<Matrix(const Vector&)> constraint_jacobian,
                                 Box primal_box) {
  const int dual_dim = num_inequalities + num_equalities;
  const int n = primal_dim + dual_dim;
  Box dual_box = Box::concat(Box::nonnegative(num_inequalities), Box::whole_space(num_equalities));
  Box full_box = Box::concat(primal_box, dual_box);
  auto f = [primal_dim, dual_dim, grad = std::move(objective_gradient), h = std::move(constraint_value),
            jac = std::move(constraint_jacobian)](const Vector& z) -> Vector {
    const Vector x = z.head(primal_dim);
    const Vector y = z.tail(dual_dim);
    Vector out(primal_dim + dual_dim);
    out.head(primal_dim) = grad(x) + jac(x).transpose() * y;
    out.tail(dual_dim) = -h(x);
    return out;
  };
  return make_smooth_box_operator(n, std::move(f), std::move(full_box), OperatorKind::SaddleLagrangian);
}

LogAllocationProblem LogAllocationProblem::make(int num_agents) {
  if (num_agents < 2) throw std::invalid_argument("log allocation problem needs at least 2 agents");
  LogAllocationProblem p;
  p.num_agents = num_agents;
  const double n = num_agents;
  p.a.resize(num_agents);
  p.c.resize(num_agents);
  p.box_lower.resize(num_agents);
  p.box_upper.resize(num_agents);
  for (int i = 0; i < num_agents; ++i) {
    const double idx = i + 1;
    p.a[i] = idx / n;
    p.c[i] = idx / (n + 1.0);
    p.box_lower[i] = idx / n;
    p.box_upper[i] = 3.0 - idx / n;
  }
  p.b = 0.5 * n * std::log(2.0);
  return p;
}

MonotoneOperator LogAllocationProblem::agent_operator(int i) const {
  if (i < 0 || i >= num_agents) throw std::invalid_argument("agent index out of range");
  const double ai = a[i], ci = c[i], bn = b / num_agents;
  Box xbox = Box::bounded(Vector::Constant(1, box_lower[i]), Vector::Constant(1, box_upper[i]));
  return saddle_operator(
      1, 1, 0,
      [ai](const Vector&) { return Vector::Constant(1, ai); },
      [ci, bn](const Vector& x) { return Vector::Constant(1, -ci * std::log1p(x[0]) + bn); },
      [ci](const Vector& x) { return Matrix::Constant(1, 1, -ci / (1.0 + x[0])); },
      std::move(xbox));
}

double LogAllocationProblem::coupled_violation(const Vector& x_per_agent) const {
  double total = 0.0;
  for (int i = 0; i < num_agents; ++i) total += -c[i] * std::log1p(x_per_agent[i]) + b / num_agents;
  return std::max(total, 0.0);
}

CoupledQpProblem CoupledQpProblem::make(std::uint64_t seed, int num_agents, int p, int q) {
  if (num_agents < 1 || p < 1 || q < 1) throw std::invalid_argument("coupled QP dims must be positive");
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    CoupledQpProblem prob;
    prob.num_agents = num_agents;
    prob.p = p;
    prob.q = q;
    prob.seed = seed;
    for (int i = 0; i < num_agents; ++i) {
      Matrix a(p, p), c(q, p);
      Vector b(p), d(q), lo(p), hi(p);
      for (int r = 0; r < p; ++r)
        for (int cix = 0; cix < p; ++cix) a(r, cix) = rng.normal();
      for (int r = 0; r < p; ++r) b[r] = rng.normal();
      for (int r = 0; r < q; ++r)
        for (int cix = 0; cix < p; ++cix) c(r, cix) = rng.normal();
      d.setOnes();  // x = 0 strictly feasible
      lo.setConstant(-1.0);
      hi.setConstant(1.0);
      prob.A.push_back(std::move(a));
      prob.b.push_back(std::move(b));
      prob.C.push_back(std::move(c));
      prob.d.push_back(std::move(d));
      prob.lower.push_back(std::move(lo));
      prob.upper.push_back(std::move(hi));
    }
    Matrix stacked(num_agents * p, p);
    for (int i = 0; i < num_agents; ++i) stacked.middleRows(i * p, p) = prob.A[static_cast<size_t>(i)];
    Eigen::JacobiSVD<Matrix> svd(stacked);
    if (svd.singularValues()[svd.singularValues().size() - 1] > 1e-8) return prob;
  }
  throw NumericalError("coupled QP: rank condition unreachable after 100 regenerations");
}

Matrix CoupledQpProblem::agent_affine_matrix(int i) const {
  const auto& Ai = A[static_cast<size_t>(i)];
  const auto& Ci = C[static_cast<size_t>(i)];
  Matrix m = Matrix::Zero(p + q, p + q);
  m.topLeftCorner(p, p) = Ai.transpose() * Ai;
  m.topRightCorner(p, q) = Ci.transpose();
  m.bottomLeftCorner(q, p) = -Ci;
  return m;
}

Vector CoupledQpProblem::agent_affine_offset(int i) const {
  Vector v(p + q);
  v.head(p) = A[static_cast<size_t>(i)].transpose() * b[static_cast<size_t>(i)];
  v.tail(q) = -d[static_cast<size_t>(i)];
  return v;
}

MonotoneOperator CoupledQpProblem::agent_operator(int i) const {
  if (i < 0 || i >= num_agents) throw std::invalid_argument("agent index out of range");
  Box xbox = Box::bounded(lower[static_cast<size_t>(i)], upper[static_cast<size_t>(i)]);
  Box full = Box::concat(xbox, Box::nonnegative(q));
  MonotoneOperator op = make_affine_box_operator(agent_affine_matrix(i), agent_affine_offset(i),
                                                 std::move(full));
  op.kind = OperatorKind::SaddleLagrangian;
  return op;
}

double CoupledQpProblem::coupled_violation(const Matrix& x_rows) const {
  Vector total = Vector::Zero(q);
  for (int i = 0; i < num_agents; ++i)
    total += C[static_cast<size_t>(i)] * x_rows.row(i).transpose() - d[static_cast<size_t>(i)];
  return total.cwiseMax(0.0).norm();
}

Vector CoupledQpProblem::common_lower() const {
  Vector lo = lower[0];
  for (const auto& l : lower) lo = lo.cwiseMax(l);
  return lo;
}

Vector CoupledQpProblem::common_upper() const {
  Vector hi = upper[0];
  for (const auto& u : upper) hi = hi.cwiseMin(u);
  return hi;
}

ReferenceSolution centralized_reference(const LogAllocationProblem& problem) {
  const int n = problem.num_agents;
  const double lo = problem.box_lower.maxCoeff();
  const double hi = problem.box_upper.minCoeff();
  if (lo > hi) throw NumericalError("log allocation problem: empty box intersection");
  const double sum_a = problem.a.sum();
  const double sum_c = problem.c.sum();
  const auto slack = [&](double x) { return problem.b - sum_c * std::log1p(x); };  // <= 0 feasible

  double x_star;
  if (slack(lo) <= 0.0) {
    x_star = lo;
  } else if (slack(hi) > 0.0) {
    throw NumericalError("log allocation problem: coupled constraint infeasible over the box");
  } else {
    double a = lo, b2 = hi;  // slack(a) > 0 >= slack(b2)
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b2);
      (slack(mid) > 0.0 ? a : b2) = mid;
    }
    x_star = b2;  // feasible end
  }

  const bool active = std::abs(slack(x_star)) <= 1e-9;
  const double lambda_star = active ? sum_a * (1.0 + x_star) / sum_c : 0.0;

  ReferenceSolution ref;
  ref.x_star = Vector::Constant(1, x_star);
  ref.lambda_star = Vector::Constant(1, lambda_star);
  ref.z_star.resize(2);
  ref.z_star << x_star, lambda_star;

  ref.v_star.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    ref.v_star(i, 0) = problem.a[i] - lambda_star * problem.c[i] / (1.0 + x_star);
    ref.v_star(i, 1) = problem.c[i] * std::log1p(x_star) - problem.b / n;
  }
  if (!active) {
    // Box multiplier carries the whole gradient; charge it to an agent whose
    // lower bound is active, and split the slack across the multiplier cone.
    int owner = 0;
    problem.box_lower.maxCoeff(&owner);
    ref.v_star(owner, 0) -= sum_a;
    for (int i = 0; i < n; ++i) ref.v_star(i, 1) += slack(x_star) / n;
  }
  ref.kkt_residual = std::abs(ref.v_star.colwise().sum().norm());
  return ref;
}

ReferenceSolution centralized_reference(const CoupledQpProblem& problem) {
  const int p = problem.p, q = problem.q, n = problem.num_agents;
  Matrix h = Matrix::Zero(p, p);
  Vector g = Vector::Zero(p);
  Matrix gmat = Matrix::Zero(q, p);
  Vector e = Vector::Zero(q);
  for (int i = 0; i < n; ++i) {
    h += problem.A[static_cast<size_t>(i)].transpose() * problem.A[static_cast<size_t>(i)];
    g -= problem.A[static_cast<size_t>(i)].transpose() * problem.b[static_cast<size_t>(i)];
    gmat += problem.C[static_cast<size_t>(i)];
    e += problem.d[static_cast<size_t>(i)];
  }
  const Vector lo = problem.common_lower();
  const Vector hi = problem.common_upper();

  // Active-set enumeration: each coordinate free / at lower / at upper, each
  // coupled constraint active or not. Desk-scale dimensions keep this cheap.
  const long box_patterns = static_cast<long>(std::pow(3.0, p));
  const long coupled_patterns = 1L << q;
  const double tol = 1e-9;

  ReferenceSolution best;
  bool found = false;
  for (long bp = 0; bp < box_patterns; ++bp) {
    std::vector<int> state(static_cast<size_t>(p));  // 0 free, 1 lower, 2 upper
    long rem = bp;
    for (int j = 0; j < p; ++j) {
      state[static_cast<size_t>(j)] = static_cast<int>(rem % 3);
      rem /= 3;
    }
    std::vector<int> free_ix, pin_ix;
    Vector x_pin = Vector::Zero(p);
    for (int j = 0; j < p; ++j) {
      if (state[static_cast<size_t>(j)] == 0) {
        free_ix.push_back(j);
      } else {
        pin_ix.push_back(j);
        x_pin[j] = state[static_cast<size_t>(j)] == 1 ? lo[j] : hi[j];
      }
    }
    const int nf = static_cast<int>(free_ix.size());
    for (long cp = 0; cp < coupled_patterns; ++cp) {
      std::vector<int> act;
      for (int r = 0; r < q; ++r)
        if ((cp >> r) & 1) act.push_back(r);
      const int na = static_cast<int>(act.size());

      Matrix kkt = Matrix::Zero(nf + na, nf + na);
      Vector rhs = Vector::Zero(nf + na);
      for (int r = 0; r < nf; ++r) {
        for (int s = 0; s < nf; ++s) kkt(r, s) = h(free_ix[static_cast<size_t>(r)], free_ix[static_cast<size_t>(s)]);
        double acc = -g[free_ix[static_cast<size_t>(r)]];
        for (int j : pin_ix) acc -= h(free_ix[static_cast<size_t>(r)], j) * x_pin[j];
        rhs[r] = acc;
      }
      for (int m = 0; m < na; ++m) {
        for (int s = 0; s < nf; ++s) {
          kkt(nf + m, s) = gmat(act[static_cast<size_t>(m)], free_ix[static_cast<size_t>(s)]);
          kkt(s, nf + m) = gmat(act[static_cast<size_t>(m)], free_ix[static_cast<size_t>(s)]);
        }
        double acc = e[act[static_cast<size_t>(m)]];
        for (int j : pin_ix) acc -= gmat(act[static_cast<size_t>(m)], j) * x_pin[j];
        rhs[nf + m] = acc;
      }
      Eigen::FullPivLU<Matrix> lu(kkt);
      if (!lu.isInvertible()) continue;
      const Vector sol = lu.solve(rhs);

      Vector x = x_pin;
      for (int r = 0; r < nf; ++r) x[free_ix[static_cast<size_t>(r)]] = sol[r];
      Vector lambda = Vector::Zero(q);
      for (int m = 0; m < na; ++m) lambda[act[static_cast<size_t>(m)]] = sol[nf + m];

      bool ok = true;
      for (int j = 0; j < p; ++j)
        if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) ok = false;
      for (int r = 0; r < q && ok; ++r) {
        if (lambda[r] < -tol) ok = false;
      }
      const Vector slack = gmat * x - e;
      for (int r = 0; r < q && ok; ++r)
        if (slack[r] > tol) ok = false;
      const Vector nu = -(h * x + g + gmat.transpose() * lambda);
      for (int j = 0; j < p && ok; ++j) {
        if (state[static_cast<size_t>(j)] == 0 && std::abs(nu[j]) > 1e-7) ok = false;
        if (state[static_cast<size_t>(j)] == 1 && nu[j] > tol) ok = false;
        if (state[static_cast<size_t>(j)] == 2 && nu[j] < -tol) ok = false;
      }
      if (!ok) continue;

      ReferenceSolution ref;
      ref.x_star = x;
      ref.lambda_star = lambda;
      ref.z_star.resize(p + q);
      ref.z_star << x, lambda;
      ref.v_star.resize(n, p + q);
      for (int i = 0; i < n; ++i) {
        Vector row(p + q);
        row.head(p) = problem.A[static_cast<size_t>(i)].transpose() *
                          (problem.A[static_cast<size_t>(i)] * x - problem.b[static_cast<size_t>(i)]) +
                      problem.C[static_cast<size_t>(i)].transpose() * lambda;
        row.tail(q) = -(problem.C[static_cast<size_t>(i)] * x - problem.d[static_cast<size_t>(i)]) +
                      slack / static_cast<double>(n);
        ref.v_star.row(i) = row.transpose();
      }
      // Charge box multipliers to an agent whose bound is the binding one.
      for (int j = 0; j < p; ++j) {
        if (state[static_cast<size_t>(j)] == 0) continue;
        int owner = 0;
        if (state[static_cast<size_t>(j)] == 1) {
          double bestv = -kInf;
          for (int i = 0; i < n; ++i)
            if (problem.lower[static_cast<size_t>(i)][j] > bestv) {
              bestv = problem.lower[static_cast<size_t>(i)][j];
              owner = i;
            }
        } else {
          double bestv = kInf;
          for (int i = 0; i < n; ++i)
            if (problem.upper[static_cast<size_t>(i)][j] < bestv) {
              bestv = problem.upper[static_cast<size_t>(i)][j];
              owner = i;
            }
        }
        ref.v_star(owner, j) += nu[j];
      }
      ref.kkt_residual = ref.v_star.colwise().sum().norm();
      best = std::move(ref);
      found = true;
      break;
    }
    if (found) break;
  }
  if (!found) throw NumericalError("coupled QP: no KKT-consistent active set found (infeasible or degenerate)");
  return best;
}

namespace {

double aggregate_distance_common(const Vector& total_smooth, const Box& total_box, const Vector& z) {
  const Vector w = -total_smooth;
  const Vector pn = total_box.project_normal_cone(z, w);
  return (w - pn).norm();
}

}  // namespace

double aggregate_zero_distance(const LogAllocationProblem& problem, const ReferenceSolution& ref) {
  const double x = ref.x_star[0], lambda = ref.lambda_star[0];
  Vector total(2);
  total.setZero();
  for (int i = 0; i < problem.num_agents; ++i) {
    total[0] += problem.a[i] - lambda * problem.c[i] / (1.0 + x);
    total[1] += problem.c[i] * std::log1p(x) - problem.b / problem.num_agents;
  }
  Box ibox = Box::concat(Box::bounded(Vector::Constant(1, problem.box_lower.maxCoeff()),
                                      Vector::Constant(1, problem.box_upper.minCoeff())),
                         Box::nonnegative(1));
  Vector z(2);
  z << x, lambda;
  return aggregate_distance_common(total, ibox, z);
}

double aggregate_zero_distance(const CoupledQpProblem& problem, const ReferenceSolution& ref) {
  Vector total = Vector::Zero(problem.p + problem.q);
  for (int i = 0; i < problem.num_agents; ++i)
    total += problem.agent_affine_matrix(i) * ref.z_star - problem.agent_affine_offset(i);
  Box ibox = Box::concat(Box::bounded(problem.common_lower(), problem.common_upper()),
                         Box::nonnegative(problem.q));
  return aggregate_distance_common(total, ibox, ref.z_star);
}

ProblemInstance ProblemInstance::log_allocation(int num_agents) {
  return ProblemInstance{LogAllocationProblem::make(num_agents)};
}

ProblemInstance ProblemInstance::coupled_qp(std::uint64_t seed, int num_agents, int p, int q) {
  return ProblemInstance{CoupledQpProblem::make(seed, num_agents, p, q)};
}

std::string ProblemInstance::name() const {
  return std::holds_alternative<LogAllocationProblem>(impl) ? "log_allocation" : "coupled_qp";
}

int ProblemInstance::num_agents() const {
  return std::visit([](const auto& p) { return p.num_agents; }, impl);
}

int ProblemInstance::ambient_dim() const {
  return std::visit([](const auto& p) { return p.ambient_dim(); }, impl);
}

int ProblemInstance::primal_dim() const {
  return std::visit([](const auto& p) { return p.primal_dim(); }, impl);
}

std::vector<MonotoneOperator> ProblemInstance::operators() const {
  std::vector<MonotoneOperator> ops;
  const int n = num_agents();
  ops.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    ops.push_back(std::visit([i](const auto& p) { return p.agent_operator(i); }, impl));
  return ops;
}

ReferenceSolution ProblemInstance::reference() const {
  return std::visit([](const auto& p) { return centralized_reference(p); }, impl);
}

Matrix ProblemInstance::initial_iterate(std::uint64_t seed) const {
  Rng rng(seed);
  const int n = num_agents();
  Matrix z0 = Matrix::Zero(n, ambient_dim());
  if (const auto* log = std::get_if<LogAllocationProblem>(&impl)) {
    for (int i = 0; i < n; ++i) z0(i, 0) = rng.uniform(log->box_lower[i], log->box_upper[i]);
  } else {
    const auto& qp = std::get<CoupledQpProblem>(impl);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < qp.p; ++j)
        z0(i, j) = rng.uniform(qp.lower[static_cast<size_t>(i)][j], qp.upper[static_cast<size_t>(i)][j]);
  }
  return z0;
}

double ProblemInstance::coupled_violation_rows(const Matrix& z_rows) const {
  if (const auto* log = std::get_if<LogAllocationProblem>(&impl))
    return log->coupled_violation(z_rows.col(0));
  const auto& qp = std::get<CoupledQpProblem>(impl);
  return qp.coupled_violation(z_rows.leftCols(qp.p));
}

std::string ProblemInstance::to_json_string() const {
  json j;
  if (const auto* log = std::get_if<LogAllocationProblem>(&impl)) {
    j["kind"] = "log_allocation";
    j["num_agents"] = log->num_agents;
  } else {
    const auto& qp = std::get<CoupledQpProblem>(impl);
    j["kind"] = "coupled_qp";
    j["num_agents"] = qp.num_agents;
    j["p"] = qp.p;
    j["q"] = qp.q;
    j["seed"] = qp.seed;
  }
  return j.dump(2);
}

ProblemInstance ProblemInstance::from_json_string(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
  const std::string kind = j.value("kind", "");
  if (kind == "log_allocation") {
    if (!j.contains("num_agents")) throw ConfigError(origin + ": missing field num_agents");
    return log_allocation(j["num_agents"].get<int>());
  }
  if (kind == "coupled_qp") {
    for (const char* field : {"num_agents", "p", "q"})
      if (!j.contains(field)) throw ConfigError(origin + ": missing field " + std::string(field));
    const int n = j["num_agents"].get<int>();
    const int p = j["p"].get<int>();
    const int q = j["q"].get<int>();
    if (j.contains("A")) {
      // Explicit coefficient arrays.
      CoupledQpProblem prob;
      prob.num_agents = n;
      prob.p = p;
      prob.q = q;
      prob.seed = 0;
      const auto mat = [&](const json& rows, int r, int c, const char* what) {
        if (static_cast<int>(rows.size()) != r) throw ConfigError(origin + ": bad row count in " + what);
        Matrix m(r, c);
        for (int i = 0; i < r; ++i) {
          if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != c)
            throw ConfigError(origin + ": bad column count in " + what);
          for (int k = 0; k < c; ++k) m(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)].get<double>();
        }
        return m;
      };
      const auto vec = [&](const json& arr, int r, const char* what) {
        if (static_cast<int>(arr.size()) != r) throw ConfigError(origin + ": bad length in " + what);
        Vector v(r);
        for (int i = 0; i < r; ++i) v[i] = arr[static_cast<size_t>(i)].get<double>();
        return v;
      };
      for (int i = 0; i < n; ++i) {
        prob.A.push_back(mat(j["A"][static_cast<size_t>(i)], p, p, "A"));
        prob.b.push_back(vec(j["b"][static_cast<size_t>(i)], p, "b"));
        prob.C.push_back(mat(j["C"][static_cast<size_t>(i)], q, p, "C"));
        prob.d.push_back(vec(j["d"][static_cast<size_t>(i)], q, "d"));
        prob.lower.push_back(vec(j["lower"][static_cast<size_t>(i)], p, "lower"));
        prob.upper.push_back(vec(j["upper"][static_cast<size_t>(i)], p, "upper"));
      }
      return ProblemInstance{std::move(prob)};
    }
    if (!j.contains("seed")) throw ConfigError(origin + ": missing field seed");
    return coupled_qp(j["seed"].get<std::uint64_t>(), n, p, q);
  }
  throw ConfigError(origin + ": unknown problem kind '" + kind + "'");
}

ProblemInstance ProblemInstance::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text, path);
}

void ProblemInstance::to_json_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write problem file: " + path);
  out << to_json_string() << "\n";
}

}  // namespace pcor
