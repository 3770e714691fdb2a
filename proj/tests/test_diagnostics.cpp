#include "pcor/diagnostics.hpp"

#include "pcor/run.hpp"
#include "pcor/rng.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace pcor;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

struct QpSetup {
  ProblemInstance problem = ProblemInstance::coupled_qp(7, 5, 3, 2);
  MixingPair mixing = build_metropolis_weights(NetworkGraph::random_geometric(5, 42));
  std::vector<MonotoneOperator> ops = problem.operators();
  ReferenceSolution reference = problem.reference();
};

}  // namespace

TEST_CASE("P and Q blocks are positive definite with a PSD gap") {
  for (int n : {2, 3, 10, 50}) {
    const auto mixing = build_metropolis_weights(NetworkGraph::random_geometric(n, 42));
    const auto pq = PqPair::from_mixing(mixing);
    CHECK(pq.min_eigenvalue_p() > 1e-10);
    CHECK(pq.min_eigenvalue_q() > 1e-10);
    CHECK(pq.p2_minus_q2_min_eigenvalue() >= -1e-10);
    CHECK(pq.p_spectral_norm() <= 1.0 + 1e-12);
    CHECK(pq.p_inverse_spectral_norm() >= 1.0);
  }
}

TEST_CASE("phi distance vanishes at the lifted reference point") {
  QpSetup s;
  const double alpha = 1.0;
  const XiPoint xi_star = lift_solution(s.reference.z_star, s.reference.v_star, s.mixing, alpha);
  CHECK(phi_distance(xi_star, s.ops, s.mixing, alpha) <= 1e-8);
}

TEST_CASE("consensual Z kills the second block of the phi residual") {
  const auto mixing = build_metropolis_weights(NetworkGraph::path(4));
  std::vector<MonotoneOperator> ops;
  for (int i = 0; i < 4; ++i) ops.push_back(make_zero_operator(2));
  XiPoint xi;
  Vector z(2);
  z << 0.3, -0.8;
  xi.Z = Vector::Ones(4) * z.transpose();
  xi.Y = random_matrix(4, 2, 5);
  // Zero operators: the residual reduces to the first block |sqrtC Y| alone.
  const double expected = (mixing.sqrtC * xi.Y).norm();
  CHECK(phi_distance(xi, ops, mixing, 1.3) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("non-consensual Z is spectrally bounded below in the phi residual") {
  const auto mixing = build_metropolis_weights(NetworkGraph::path(4));
  std::vector<MonotoneOperator> ops;
  for (int i = 0; i < 4; ++i) ops.push_back(make_zero_operator(1));
  XiPoint xi;
  xi.Z = random_matrix(4, 1, 3);
  xi.Y = Matrix::Zero(4, 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(mixing.sqrtC);
  double sigma_min_pos = kInf;
  for (int i = 0; i < 4; ++i)
    if (eig.eigenvalues()[i] > 1e-10) sigma_min_pos = std::min(sigma_min_pos, eig.eigenvalues()[i]);
  const Vector mean = xi.Z.colwise().mean().transpose();
  const double deviation = (xi.Z - Vector::Ones(4) * mean.transpose()).norm();
  CHECK(phi_distance(xi, ops, mixing, 1.0) >= sigma_min_pos * deviation - 1e-12);
}

TEST_CASE("lift of zero operators is zero; unbalanced selections are rejected") {
  const auto mixing = build_metropolis_weights(NetworkGraph::path(3));
  Vector z(2);
  z << 1.0, -2.0;
  const XiPoint xi = lift_solution(z, Matrix::Zero(3, 2), mixing, 1.0);
  CHECK(fro(xi.Y) == 0.0);
  CHECK(fro(xi.Z - Vector::Ones(3) * z.transpose()) == 0.0);

  Matrix bad = Matrix::Zero(3, 2);
  bad(0, 0) = 1.0;  // column sums (1, 0)
  CHECK_THROWS_AS(lift_solution(z, bad, mixing, 1.0), std::invalid_argument);
}

TEST_CASE("resolvent of the preconditioned stacked operator tracks the sweep") {
  QpSetup s;
  RunConfig cfg;
  cfg.method = Method::ProximalCorrectionZY;
  cfg.mixing = s.mixing;
  cfg.operators = s.ops;
  cfg.criterion = InexactnessCriterion::exact(1e-13);
  cfg.alpha = 1.0;
  cfg.initial_z = s.problem.initial_iterate(1);
  cfg.max_iterations = 6;

  const auto pq = PqPair::from_mixing(s.mixing);
  auto state = pc_init(cfg);
  for (int it = 0; it < 4; ++it) {
    const XiPoint xi{state.Z, state.Y};
    const auto next = pc_step_zy(state, cfg);
    REQUIRE(next.step_ok);
    const XiPoint prox = prox_p_phi(pq.apply_p_inverse(pq.apply_q(xi)), s.ops, s.mixing, cfg.alpha);
    CHECK((prox - XiPoint{next.Z, next.Y}).norm() < 1e-10);
    state = next;
  }
}

TEST_CASE("displacement map properties hold in the P geometry") {
  QpSetup s;
  const double alpha = 1.0;
  const auto pq = PqPair::from_mixing(s.mixing);
  Rng rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    const XiPoint xi{random_matrix(5, 5, 100 + trial), random_matrix(5, 5, 200 + trial)};
    const XiPoint xi2{random_matrix(5, 5, 300 + trial), random_matrix(5, 5, 400 + trial)};
    const XiPoint prox1 = prox_p_phi(xi, s.ops, s.mixing, alpha);
    const XiPoint prox2 = prox_p_phi(xi2, s.ops, s.mixing, alpha);
    const XiPoint psi1 = xi - prox1;
    const XiPoint psi2 = xi2 - prox2;

    // Reconstruction and membership: P psi in Phi(prox).
    CHECK((prox1 + psi1 - xi).norm() < 1e-12);
    double member_sq = 0.0;
    const Matrix g = s.mixing.sqrtC * prox1.Y;
    const Matrix p_psi = pq.p_block() * psi1.Z;
    for (int i = 0; i < 5; ++i) {
      const MonotoneOperator& op = s.ops[static_cast<size_t>(i)];
      const Vector zrow = prox1.Z.row(i).transpose();
      const Vector v = alpha * op.select(zrow) + g.row(i).transpose() - p_psi.row(i).transpose();
      const Vector w = -v;
      const Vector pn = op.box->project_normal_cone(zrow, w);
      member_sq += (w - pn).squaredNorm();
    }
    CHECK(std::sqrt(member_sq) < 1e-8);
    CHECK(fro(psi1.Y - (xi.Y - prox1.Y)) < 1e-12);

    // Firm nonexpansiveness in the metric where the preconditioned operator
    // is monotone (the P-inner product).
    const XiPoint dprox = prox1 - prox2;
    const XiPoint dpsi = psi1 - psi2;
    const XiPoint dxi = xi - xi2;
    const double inner_p = dprox.dot(pq.apply_p(dpsi));
    CHECK(inner_p >= -1e-8);
    const double lhs = std::pow(pq.p_norm(dprox), 2) + std::pow(pq.p_norm(dpsi), 2);
    CHECK(lhs <= std::pow(pq.p_norm(dxi), 2) + 1e-8);
  }
}

TEST_CASE("stacked-residual monotonicity identity") {
  QpSetup s;
  const double alpha = 1.0;
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix z1(5, 5), z2(5, 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 3; ++j) {
        z1(i, j) = rng.uniform(-1, 1);
        z2(i, j) = rng.uniform(-1, 1);
      }
      for (int j = 3; j < 5; ++j) {
        z1(i, j) = rng.uniform(0, 2);
        z2(i, j) = rng.uniform(0, 2);
      }
    }
    const Matrix y1 = random_matrix(5, 5, 500 + trial);
    const Matrix y2 = random_matrix(5, 5, 600 + trial);
    Matrix v1(5, 5), v2(5, 5);
    for (int i = 0; i < 5; ++i) {
      v1.row(i) = s.ops[static_cast<size_t>(i)].select(z1.row(i).transpose()).transpose();
      v2.row(i) = s.ops[static_cast<size_t>(i)].select(z2.row(i).transpose()).transpose();
    }
    const Matrix o1_top = alpha * v1 + s.mixing.sqrtC * y1;
    const Matrix o2_top = alpha * v2 + s.mixing.sqrtC * y2;
    const Matrix o1_bot = -s.mixing.sqrtC * z1;
    const Matrix o2_bot = -s.mixing.sqrtC * z2;
    const double lhs = ((o1_top - o2_top).array() * (z1 - z2).array()).sum() +
                       ((o1_bot - o2_bot).array() * (y1 - y2).array()).sum();
    const double rhs = alpha * ((v1 - v2).array() * (z1 - z2).array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    CHECK(lhs >= -1e-10);
  }
}

TEST_CASE("key recursion holds along an exact run") {
  QpSetup s;
  RunConfig cfg;
  cfg.method = Method::ProximalCorrectionZY;
  cfg.mixing = s.mixing;
  cfg.operators = s.ops;
  cfg.criterion = InexactnessCriterion::exact(1e-13);
  cfg.alpha = 1.0;
  cfg.initial_z = s.problem.initial_iterate(1);
  cfg.max_iterations = 12;

  const auto pq = PqPair::from_mixing(s.mixing);
  auto state = pc_init(cfg);
  for (int it = 0; it < 10; ++it) {
    const XiPoint xi_prev{state.Zprev, state.Y - s.mixing.sqrtC * state.Z};
    const XiPoint xi{state.Z, state.Y};
    const XiPoint omega{cfg.alpha * state.V + s.mixing.sqrtC * state.Y, -s.mixing.sqrtC * state.Z};
    CHECK((pq.apply_p(xi) + omega - pq.apply_q(xi_prev)).norm() < 1e-9);
    state = pc_step_zy(state, cfg);
    REQUIRE(state.step_ok);
  }
}

TEST_CASE("audited transition with no injected error collapses to identities") {
  QpSetup s;
  auto state = [&] {
    RunConfig cfg;
    cfg.method = Method::ProximalCorrectionZY;
    cfg.mixing = s.mixing;
    cfg.operators = s.ops;
    cfg.criterion = InexactnessCriterion::exact(1e-13);
    cfg.alpha = 1.0;
    cfg.initial_z = s.problem.initial_iterate(1);
    cfg.max_iterations = 4;
    auto st = pc_init(cfg);
    st = pc_step_zy(st, cfg);
    return st;
  }();
  const XiPoint xi_prev{state.Z, state.Y};
  const auto report = audit_perturbed_step(s.ops, s.mixing, 1.0, xi_prev, 0.0, 1);
  INFO(report.to_string());
  CHECK(report.all_pass());
  CHECK(report.checks[0].lhs < 1e-9);
}

TEST_CASE("audited transitions with injected errors verify the lifted-step bounds") {
  QpSetup s;
  RunConfig cfg;
  cfg.method = Method::ProximalCorrectionZY;
  cfg.mixing = s.mixing;
  cfg.operators = s.ops;
  cfg.criterion = InexactnessCriterion::exact(1e-13);
  cfg.alpha = 1.0;
  cfg.initial_z = s.problem.initial_iterate(1);
  cfg.max_iterations = 6;
  auto state = pc_init(cfg);
  for (int t = 0; t < 3; ++t) {
    const XiPoint xi_prev{state.Z, state.Y};
    const auto report = audit_perturbed_step(s.ops, s.mixing, 1.0, xi_prev, 1e-3, 10 + t);
    INFO(report.to_string());
    CHECK(report.all_pass());
    CHECK(report.injected_norm == doctest::Approx(1e-3));
    state = pc_step_zy(state, cfg);
    REQUIRE(state.step_ok);
  }
}

TEST_CASE("rate fit: geometric, stagnating, and invalid windows") {
  std::vector<double> geo;
  for (int k = 0; k < 60; ++k) geo.push_back(3.0 * std::pow(0.5, k));
  const auto fit = rate_fit(geo, 10, 60);
  CHECK(fit.theta_hat == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.contraction);

  std::vector<double> flat(40, 0.37);
  const auto stag = rate_fit(flat, 0, 40);
  CHECK(stag.theta_hat == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(stag.contraction);

  std::vector<double> bad = {1.0, 0.0, 2.0};
  CHECK_THROWS_AS(rate_fit(bad, 0, 3), std::invalid_argument);
  std::vector<double> nan_seq = {1.0, kNaN};
  CHECK_THROWS_AS(rate_fit(nan_seq, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(rate_fit(geo, 5, 5), std::invalid_argument);
}

TEST_CASE("allocation metrics: consensual feasible, infeasible, and hand-computed rows") {
  const auto problem = ProblemInstance::log_allocation(2);
  const auto reference = problem.reference();
  RunHooks hooks;
  hooks.problem = &problem;
  hooks.reference = &reference;

  // Consensual feasible iterate at the reference: all metrics vanish.
  Matrix z_star_rows(2, 2);
  z_star_rows.setZero();
  z_star_rows.col(0).setConstant(reference.x_star[0]);
  auto m = evaluate_iterate(0, z_star_rows, hooks);
  CHECK(m.solution_error <= 1e-12);
  CHECK(m.consensus_violation <= 1e-12);
  CHECK(m.constraint_violation <= 1e-9);

  // Consensual but infeasible: only the coupled part contributes.
  Matrix z_bad = z_star_rows;
  z_bad.col(0).setConstant(reference.x_star[0] - 5e-2);
  m = evaluate_iterate(0, z_bad, hooks);
  CHECK(m.consensus_violation <= 1e-12);
  CHECK(m.constraint_violation > 0.0);

  // Hand computation for a non-consensual pair.
  const auto& p = std::get<LogAllocationProblem>(problem.impl);
  Matrix z(2, 2);
  z << 1.2, 0.0, 1.4, 0.0;
  m = evaluate_iterate(0, z, hooks);
  const double xbar = 1.3;
  const double consensus = std::sqrt(std::pow(1.2 - xbar, 2) + std::pow(1.4 - xbar, 2));
  const double coupled = std::max(
      -p.c[0] * std::log1p(1.2) - p.c[1] * std::log1p(1.4) + p.b, 0.0);
  CHECK(m.consensus_violation == doctest::Approx(consensus).epsilon(1e-12));
  CHECK(m.constraint_violation == doctest::Approx(consensus + coupled).epsilon(1e-12));
  const double sol = std::sqrt(std::pow(1.2 - reference.x_star[0], 2) +
                               std::pow(1.4 - reference.x_star[0], 2));
  CHECK(m.solution_error == doctest::Approx(sol).epsilon(1e-12));
}

TEST_CASE("the lifted reference is a fixed point of the exact step") {
  QpSetup s;
  RunConfig cfg;
  cfg.method = Method::ProximalCorrection;
  cfg.mixing = s.mixing;
  cfg.operators = s.ops;
  cfg.criterion = InexactnessCriterion::exact(1e-13);
  cfg.alpha = 1.0;
  cfg.initial_z = Vector::Ones(5) * s.reference.z_star.transpose();
  cfg.max_iterations = 3;

  const XiPoint xi_star = lift_solution(s.reference.z_star, s.reference.v_star, s.mixing, cfg.alpha);
  AlgorithmState state;
  state.alpha = cfg.alpha;
  state.Z = xi_star.Z;
  state.Zprev = xi_star.Z;
  state.V = -(s.mixing.sqrtC * xi_star.Y) / cfg.alpha;
  state.Y = xi_star.Y;
  state.k = 1;
  const auto next = pc_step(state, cfg);
  REQUIRE(next.step_ok);
  CHECK(fro(next.Z - state.Z) <= 1e-8);
  const auto next_zy = pc_step_zy(state, cfg);
  REQUIRE(next_zy.step_ok);
  CHECK(fro(next_zy.Z - state.Z) <= 1e-8);
}
