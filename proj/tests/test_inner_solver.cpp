#include "pcor/inner_solver.hpp"

#include "pcor/problems.hpp"
#include "test_oracles.hpp"

#include <doctest.h>

#include <Eigen/LU>

using namespace pcor;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("closed forms: projection, scalar linear solve, affine-plus-box fallback") {
  const auto boxop = make_box_normal_cone(Box::bounded(Vector::Zero(2), Vector::Ones(2)));
  const auto proj = closed_form_resolvent(boxop, 1.0, vec2(-0.5, 1.7));
  CHECK(proj.point[0] == 0.0);
  CHECK(proj.point[1] == 1.0);

  const auto affine = make_affine_operator(2.0 * Matrix::Identity(1, 1), Vector::Zero(1));
  const auto lin = closed_form_resolvent(affine, 0.5, Vector::Constant(1, 3.0));
  CHECK(lin.point[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(lin.certificate < 1e-14);

  const auto mixed = make_affine_box_operator(Matrix::Identity(1, 1), Vector::Zero(1),
                                              Box::bounded(Vector::Zero(1), Vector::Ones(1)));
  CHECK_THROWS_AS(closed_form_resolvent(mixed, 1.0, Vector::Constant(1, 0.4)), NoClosedFormError);
}

TEST_CASE("saddle solver reaches a tight certificate on an unconstrained quadratic") {
  Matrix a(2, 2);
  a << 1.2, 0.6, -0.6, 0.9;
  const Vector b = vec2(0.4, -0.7);
  // Wide inactive box forces the iterative path.
  auto op = make_affine_box_operator(a, b, Box::bounded(Vector::Constant(2, -100.0),
                                                        Vector::Constant(2, 100.0)));
  const double alpha = 1.0;
  const Vector input = vec2(0.3, 1.1);
  SaddleSubproblem sub{op, alpha, input};
  SolverSettings settings;
  const auto r = solve_saddle(sub, settings, [](const Vector&) { return 1e-12; });
  REQUIRE(r.converged);
  CHECK(r.inner_iterations <= 1000);
  const Vector direct = (Matrix::Identity(2, 2) + alpha * a).partialPivLu().solve(input + alpha * b);
  CHECK((r.point - direct).norm() < 1e-11);
}

TEST_CASE("a loose target stops strictly earlier than a tight one") {
  const auto problem = LogAllocationProblem::make(50);
  const auto op = problem.agent_operator(0);
  SaddleSubproblem sub{op, 2.0, vec2(1.3, 0.4)};
  SolverSettings settings;
  const auto loose = solve_saddle(sub, settings, [](const Vector&) { return 0.1; });
  const auto tight = solve_saddle(sub, settings, [](const Vector&) { return 1e-12; });
  REQUIRE(loose.converged);
  REQUIRE(tight.converged);
  CHECK(loose.inner_iterations < tight.inner_iterations);
}

TEST_CASE("log-allocation agent resolvent matches the nested grid search") {
  const auto problem = LogAllocationProblem::make(50);
  const int agent = 0;  // first agent
  const auto op = problem.agent_operator(agent);
  ResolventQuery q;
  q.alpha = 2.0;
  q.input_point = vec2(1.0, 0.5);
  q.criterion = InexactnessCriterion::exact(1e-12);
  const auto r = resolve(op, q);
  REQUIRE(r.converged);
  const auto oracle = test_oracles::grid_saddle_search(problem, agent, 2.0, 1.0, 0.5);
  CHECK(r.point[0] == doctest::Approx(oracle.primal).epsilon(1e-6));
  CHECK(r.point[1] == doctest::Approx(oracle.dual).epsilon(1e-6));
  // Bisection route agrees with the grid route.
  const auto kkt = test_oracles::bisection_saddle(problem, agent, 2.0, 1.0, 0.5);
  CHECK(kkt.primal == doctest::Approx(oracle.primal).epsilon(1e-8));
}

TEST_CASE("certificate honesty: stored value reproduces from scratch") {
  const auto problem = LogAllocationProblem::make(50);
  const auto op = problem.agent_operator(30);
  ResolventQuery q;
  q.alpha = 2.0;
  q.input_point = vec2(1.8, 0.2);
  q.criterion = InexactnessCriterion::absolute_summable(PrecisionSchedule::power(0.02, 1.5));
  q.iteration_index = 2;
  const auto r = resolve(op, q);
  REQUIRE(r.converged);
  CHECK(s_t_distance(op, q.alpha, q.input_point, r.point) ==
        doctest::Approx(r.certificate).epsilon(1e-12));
}

TEST_CASE("sandwich bound against a near-machine-exact run") {
  const auto problem = LogAllocationProblem::make(50);
  const auto op = problem.agent_operator(12);
  ResolventQuery q;
  q.alpha = 2.0;
  q.input_point = vec2(1.1, 1.0);
  q.criterion = InexactnessCriterion::exact(1e-13);
  const auto exact = resolve(op, q);
  REQUIRE(exact.converged);
  for (double target : {1e-3, 1e-5, 1e-8}) {
    ResolventQuery ql = q;
    ql.criterion = InexactnessCriterion::exact(target);
    const auto r = resolve(op, ql);
    REQUIRE(r.converged);
    CHECK((r.point - exact.point).norm() <= q.alpha * r.certificate + 1e-8);
  }
}

TEST_CASE("iteration cap failure carries the best certificate") {
  const auto problem = LogAllocationProblem::make(50);
  const auto op = problem.agent_operator(5);
  SaddleSubproblem sub{op, 2.0, vec2(1.5, 0.7)};
  SolverSettings settings;
  settings.max_iterations = 3;
  const auto r = solve_saddle(sub, settings, [](const Vector&) { return 1e-14; });
  CHECK_FALSE(r.converged);
  CHECK(r.certificate > 0.0);
  CHECK(std::isfinite(r.certificate));
}
