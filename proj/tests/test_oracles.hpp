// Independent test oracles: brute-force searches and closed forms kept free
// of the library's solver path.
#pragma once

#include "pcor/problems.hpp"

#include <cmath>
#include <functional>

namespace pcor::test_oracles {

struct SaddlePoint {
  double primal = 0.0;
  double dual = 0.0;
};

// Nested grid refinement for the 2-d regularized saddle subproblem of one
// log-allocation agent: the inner maximization over the one-sided multiplier
// is a closed-form clip, the outer minimization is a shrinking grid search.
inline SaddlePoint grid_saddle_search(const LogAllocationProblem& problem, int agent, double alpha,
                                      double x_base, double y_base, int rounds = 14) {
  const double a = problem.a[agent];
  const double c = problem.c[agent];
  const double bn = problem.b / problem.num_agents;
  const auto h = [&](double z) { return -c * std::log1p(z) + bn; };
  const auto eta_star = [&](double z) { return std::max(0.0, y_base + alpha * h(z)); };
  const auto value = [&](double z) {
    const double eta = eta_star(z);
    return a * z + eta * h(z) - (eta - y_base) * (eta - y_base) / (2.0 * alpha) +
           (z - x_base) * (z - x_base) / (2.0 * alpha);
  };
  double lo = problem.box_lower[agent];
  double hi = problem.box_upper[agent];
  double best = lo;
  for (int round = 0; round < rounds; ++round) {
    const int grid = 800;
    double best_val = kInf;
    for (int i = 0; i <= grid; ++i) {
      const double z = lo + (hi - lo) * i / grid;
      const double v = value(z);
      if (v < best_val) {
        best_val = v;
        best = z;
      }
    }
    const double width = (hi - lo) / grid;
    lo = std::max(problem.box_lower[agent], best - 2.0 * width);
    hi = std::min(problem.box_upper[agent], best + 2.0 * width);
  }
  return {best, eta_star(best)};
}

// 1-d KKT root of the same subproblem by bisection: the reduced stationarity
// map is strictly increasing, so the box-clipped root is the primal solution.
inline SaddlePoint bisection_saddle(const LogAllocationProblem& problem, int agent, double alpha,
                                    double x_base, double y_base) {
  const double a = problem.a[agent];
  const double c = problem.c[agent];
  const double bn = problem.b / problem.num_agents;
  const auto h = [&](double z) { return -c * std::log1p(z) + bn; };
  const auto eta_star = [&](double z) { return std::max(0.0, y_base + alpha * h(z)); };
  const auto psi = [&](double z) {
    return a - eta_star(z) * c / (1.0 + z) + (z - x_base) / alpha;
  };
  double lo = problem.box_lower[agent];
  double hi = problem.box_upper[agent];
  double z;
  if (psi(lo) >= 0.0) {
    z = lo;
  } else if (psi(hi) <= 0.0) {
    z = hi;
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (psi(mid) < 0.0 ? lo : hi) = mid;
    }
    z = 0.5 * (lo + hi);
  }
  return {z, eta_star(z)};
}

}  // namespace pcor::test_oracles
