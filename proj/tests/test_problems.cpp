#include "pcor/problems.hpp"

#include "pcor/inner_solver.hpp"
#include "pcor/rng.hpp"
#include "test_oracles.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>

using namespace pcor;

TEST_CASE("log-allocation parameters follow the stated formulas") {
  const auto p50 = LogAllocationProblem::make(50);
  CHECK(p50.b == doctest::Approx(25.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(p50.b == doctest::Approx(17.3287).epsilon(1e-4));
  CHECK(p50.box_lower[49] == doctest::Approx(1.0));
  CHECK(p50.box_upper[49] == doctest::Approx(2.0));

  const auto p2 = LogAllocationProblem::make(2);
  CHECK(p2.a[0] == doctest::Approx(0.5));
  CHECK(p2.a[1] == doctest::Approx(1.0));
  CHECK(p2.c[0] == doctest::Approx(1.0 / 3.0));
  CHECK(p2.c[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("log-allocation problems have a strictly feasible interior point") {
  for (int n : {2, 10, 50}) {
    const auto p = LogAllocationProblem::make(n);
    const double x = 1.5;
    CHECK(x > p.box_lower.maxCoeff());
    CHECK(x < p.box_upper.minCoeff());
    CHECK(p.b - p.c.sum() * std::log1p(x) < -1e-3);
  }
}

TEST_CASE("agent saddle map matches finite differences at interior points") {
  const auto p = LogAllocationProblem::make(50);
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int agent = static_cast<int>(rng.integer_below(50));
    const auto op = p.agent_operator(agent);
    const double x = rng.uniform(p.box_lower[agent] + 0.05, p.box_upper[agent] - 0.05);
    const double y = rng.uniform(0.1, 2.0);
    Vector z(2);
    z << x, y;
    // Saddle convention: first block grad_x Ltilde, second block -grad_y Ltilde.
    const double lt_x = p.a[agent] - y * p.c[agent] / (1.0 + x);
    const double lt_y = -(-p.c[agent] * std::log1p(x) + p.b / 50.0);
    const Vector f = op.select(z);
    CHECK(f[0] == doctest::Approx(lt_x).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(lt_y).epsilon(1e-12));
    // Finite-difference cross-check of the underlying Lagrangian value.
    const double h = 1e-6;
    const auto lagrangian = [&](double xx, double yy) {
      return p.a[agent] * xx + yy * (-p.c[agent] * std::log1p(xx) + p.b / 50.0);
    };
    const double fd_x = (lagrangian(x + h, y) - lagrangian(x - h, y)) / (2 * h);
    const double fd_y = (lagrangian(x, y + h) - lagrangian(x, y - h)) / (2 * h);
    CHECK(f[0] == doctest::Approx(fd_x).epsilon(1e-6));
    CHECK(f[1] == doctest::Approx(-fd_y).epsilon(1e-6));
  }
}

TEST_CASE("sampled monotonicity of the bundled agent operators") {
  const auto log_problem = LogAllocationProblem::make(50);
  const auto log_op = log_problem.agent_operator(24);
  const auto qp = CoupledQpProblem::make(7, 5, 3, 2);
  const auto qp_op = qp.agent_operator(2);
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    Vector x(2), y(2);
    x << rng.uniform(log_problem.box_lower[24], log_problem.box_upper[24]), rng.uniform(0, 3);
    y << rng.uniform(log_problem.box_lower[24], log_problem.box_upper[24]), rng.uniform(0, 3);
    CHECK((x - y).dot(log_op.select(x) - log_op.select(y)) >= -1e-10);

    Vector u(5), v(5);
    for (int i = 0; i < 3; ++i) {
      u[i] = rng.uniform(-1, 1);
      v[i] = rng.uniform(-1, 1);
    }
    for (int i = 3; i < 5; ++i) {
      u[i] = rng.uniform(0, 2);
      v[i] = rng.uniform(0, 2);
    }
    CHECK((u - v).dot(qp_op.select(u) - qp_op.select(v)) >= -1e-10);
  }
}

TEST_CASE("a violated coupled constraint activates the multiplier block") {
  const auto p = LogAllocationProblem::make(50);
  const auto op = p.agent_operator(0);
  // Base point: multiplier 0, primal where the local constraint term is
  // positive, so the regularized dual update must move up.
  ResolventQuery q;
  q.alpha = 2.0;
  q.input_point.resize(2);
  q.input_point << 1.0, 0.0;
  q.criterion = InexactnessCriterion::exact(1e-12);
  const auto r = resolve(op, q);
  REQUIRE(r.converged);
  CHECK(r.point[1] > 1e-3);
  const auto oracle = test_oracles::bisection_saddle(p, 0, 2.0, 1.0, 0.0);
  CHECK(r.point[0] == doctest::Approx(oracle.primal).epsilon(1e-8));
  CHECK(r.point[1] == doctest::Approx(oracle.dual).epsilon(1e-8));
}

TEST_CASE("coupled QP instances are byte-identical for a fixed seed") {
  const auto a = CoupledQpProblem::make(7, 5, 3, 2);
  const auto b = CoupledQpProblem::make(7, 5, 3, 2);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.A[i] == b.A[i]);
    CHECK(a.b[i] == b.b[i]);
    CHECK(a.C[i] == b.C[i]);
    CHECK(a.d[i] == b.d[i]);
  }
  const auto c = CoupledQpProblem::make(8, 5, 3, 2);
  CHECK(a.A[0] != c.A[0]);
}

TEST_CASE("coupled QP reference oracle solves the KKT system") {
  const auto qp = CoupledQpProblem::make(3, 3, 2, 1);
  const auto ref = centralized_reference(qp);
  CHECK(ref.kkt_residual < 1e-8);
  CHECK(ref.lambda_star.minCoeff() >= -1e-9);
  // Feasibility of the coupled block and the box.
  Vector slack = Vector::Zero(1);
  for (int i = 0; i < 3; ++i) slack += qp.C[i] * ref.x_star - qp.d[i];
  CHECK(slack.maxCoeff() <= 1e-8);
  CHECK((ref.x_star - qp.common_lower()).minCoeff() >= -1e-9);
  CHECK((qp.common_upper() - ref.x_star).minCoeff() >= -1e-9);
}

TEST_CASE("inactive coupling reduces the QP reference to clipped least squares") {
  auto qp = CoupledQpProblem::make(11, 3, 2, 1);
  for (auto& d : qp.d) d.setConstant(100.0);  // coupling cannot bind
  for (auto& lo : qp.lower) lo.setConstant(-50.0);
  for (auto& hi : qp.upper) hi.setConstant(50.0);
  const auto ref = centralized_reference(qp);
  Matrix h = Matrix::Zero(2, 2);
  Vector g = Vector::Zero(2);
  for (int i = 0; i < 3; ++i) {
    h += qp.A[i].transpose() * qp.A[i];
    g += qp.A[i].transpose() * qp.b[i];
  }
  const Vector ls = h.partialPivLu().solve(g);
  CHECK((ref.x_star - ls).norm() < 1e-9);
  CHECK(ref.lambda_star.norm() == 0.0);
}

TEST_CASE("QP resolvents are locally affine away from activity changes") {
  const auto qp = CoupledQpProblem::make(7, 5, 3, 2);
  const auto op = qp.agent_operator(0);
  const InexactnessCriterion exact = InexactnessCriterion::exact(1e-13);
  Vector base(5);
  base << 0.2, -0.1, 0.3, 0.4, 0.1;
  Vector dir(5);
  dir << 1.0, -0.5, 0.2, 0.3, -0.8;
  dir.normalize();
  const auto at = [&](double t) {
    ResolventQuery q;
    q.alpha = 1.0;
    q.input_point = base + t * dir;
    q.criterion = exact;
    const auto r = resolve(op, q);
    REQUIRE(r.converged);
    return r.point;
  };
  const Vector r0 = at(0.0), r1 = at(2e-4), rm = at(1e-4);
  CHECK((0.5 * (r0 + r1) - rm).norm() < 1e-8);
}

TEST_CASE("log-allocation reference: bisection oracle matches the closed form") {
  for (int n : {2, 10, 50}) {
    const auto p = LogAllocationProblem::make(n);
    const auto ref = centralized_reference(p);
    const double closed_form = std::max(p.box_lower.maxCoeff(),
                                        std::exp(p.b / p.c.sum()) - 1.0);
    CHECK(ref.x_star[0] == doctest::Approx(closed_form).epsilon(1e-9));
    CHECK(ref.kkt_residual < 1e-10);
  }
}

TEST_CASE("two-agent toy reference: bisection agrees with a feasible grid search") {
  const auto p = LogAllocationProblem::make(2);
  const auto ref = centralized_reference(p);
  // Independent route: shrinking grid over the box, +inf off the feasible set.
  double lo = p.box_lower.maxCoeff(), hi = p.box_upper.minCoeff();
  double best = hi;
  for (int round = 0; round < 12; ++round) {
    double best_val = kInf;
    const int grid = 1000;
    for (int i = 0; i <= grid; ++i) {
      const double x = lo + (hi - lo) * i / grid;
      if (p.b - p.c.sum() * std::log1p(x) > 0) continue;
      const double val = p.a.sum() * x;
      if (val < best_val) {
        best_val = val;
        best = x;
      }
    }
    const double width = (hi - lo) / grid;
    lo = std::max(p.box_lower.maxCoeff(), best - 2 * width);
    hi = std::min(p.box_upper.minCoeff(), best + 2 * width);
  }
  CHECK(ref.x_star[0] == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("zero-sum certificate at the reference point") {
  const auto log_problem = LogAllocationProblem::make(50);
  CHECK(aggregate_zero_distance(log_problem, centralized_reference(log_problem)) <= 1e-8);
  const auto qp = CoupledQpProblem::make(7, 5, 3, 2);
  CHECK(aggregate_zero_distance(qp, centralized_reference(qp)) <= 1e-8);
}

TEST_CASE("reference selections have zero column sums") {
  const auto log_ref = centralized_reference(LogAllocationProblem::make(50));
  CHECK(log_ref.v_star.colwise().sum().norm() < 1e-10);
  const auto qp_ref = centralized_reference(CoupledQpProblem::make(7, 5, 3, 2));
  CHECK(qp_ref.v_star.colwise().sum().norm() < 1e-8);
}

TEST_CASE("problem JSON round trip") {
  const auto inst = ProblemInstance::coupled_qp(7, 5, 3, 2);
  const auto back = ProblemInstance::from_json_string(inst.to_json_string(), "inline");
  CHECK(back.name() == "coupled_qp");
  CHECK(std::get<CoupledQpProblem>(back.impl).A[0] == std::get<CoupledQpProblem>(inst.impl).A[0]);

  const auto alloc = ProblemInstance::log_allocation(10);
  const auto alloc_back = ProblemInstance::from_json_string(alloc.to_json_string(), "inline");
  CHECK(alloc_back.num_agents() == 10);

  CHECK_THROWS_AS(ProblemInstance::from_json_string("{\"kind\":\"bogus\"}", "inline"), ConfigError);
  CHECK_THROWS_AS(ProblemInstance::from_json_string("not json", "inline"), ConfigError);
}

TEST_CASE("initial iterates are seeded, in-box, with zero multipliers") {
  const auto inst = ProblemInstance::log_allocation(50);
  const Matrix a = inst.initial_iterate(1);
  const Matrix b = inst.initial_iterate(1);
  CHECK(a == b);
  const Matrix c = inst.initial_iterate(2);
  CHECK(a != c);
  const auto& p = std::get<LogAllocationProblem>(inst.impl);
  for (int i = 0; i < 50; ++i) {
    CHECK(a(i, 0) >= p.box_lower[i]);
    CHECK(a(i, 0) <= p.box_upper[i]);
    CHECK(a(i, 1) == 0.0);
  }
}
