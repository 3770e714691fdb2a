#include "pcor/graph.hpp"

#include "pcor/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace pcor {

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i] + 1);  // report 1-based
  }
  return out;
}

}  // namespace

NetworkGraph NetworkGraph::from_edges(int num_agents, std::vector<std::pair<int, int>> edges) {
  if (num_agents <= 0) throw ConfigError("graph must have at least one agent");
  std::set<std::pair<int, int>> unique;
  for (auto [i, j] : edges) {
    if (i == j) throw ConfigError("self-loop on vertex " + std::to_string(i + 1));
    if (i < 0 || j < 0 || i >= num_agents || j >= num_agents)
      throw ConfigError("edge endpoint out of range: (" + std::to_string(i + 1) + "," +
                        std::to_string(j + 1) + ")");
    unique.emplace(std::min(i, j), std::max(i, j));
  }
  NetworkGraph g;
  g.num_agents = num_agents;
  g.edges.assign(unique.begin(), unique.end());
  return g;
}

NetworkGraph NetworkGraph::path(int num_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < num_agents; ++i) e.emplace_back(i, i + 1);
  return from_edges(num_agents, std::move(e));
}

NetworkGraph NetworkGraph::complete(int num_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < num_agents; ++i)
    for (int j = i + 1; j < num_agents; ++j) e.emplace_back(i, j);
  return from_edges(num_agents, std::move(e));
}

NetworkGraph NetworkGraph::random_geometric(int num_agents, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<double, double>> pts(static_cast<size_t>(num_agents));
  for (auto& p : pts) {
    p.first = rng.uniform01();
    p.second = rng.uniform01();
  }
  for (int step = 1; step <= 29; ++step) {  // 29 * 0.05 = 1.45 > sqrt(2) covers the square
    const double radius = 0.05 * step;
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < num_agents; ++i) {
      for (int j = i + 1; j < num_agents; ++j) {
        const double dx = pts[i].first - pts[j].first;
        const double dy = pts[i].second - pts[j].second;
        if (dx * dx + dy * dy <= radius * radius) e.emplace_back(i, j);
      }
    }
    NetworkGraph g = from_edges(num_agents, std::move(e));
    if (g.is_connected()) return g;
  }
  throw NumericalError("random geometric graph did not connect");
}

NetworkGraph NetworkGraph::parse_edge_list(std::istream& in, const std::string& origin) {
  int n = 0;
  if (!(in >> n) || n <= 0) throw ConfigError(origin + ": first line must be the agent count");
  std::vector<std::pair<int, int>> e;
  int i = 0, j = 0;
  while (in >> i >> j) e.emplace_back(i - 1, j - 1);
  if (!in.eof()) {
    in.clear();
    std::string tail;
    std::getline(in, tail);
    throw ConfigError(origin + ": malformed edge line near '" + tail + "'");
  }
  return from_edges(n, std::move(e));
}

NetworkGraph NetworkGraph::load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list file: " + path);
  return parse_edge_list(in, path);
}

void NetworkGraph::save_edge_list(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write edge list file: " + path);
  out << num_agents << "\n";
  for (auto [i, j] : edges) out << (i + 1) << " " << (j + 1) << "\n";
}

std::vector<int> NetworkGraph::degrees() const {
  std::vector<int> deg(static_cast<size_t>(num_agents), 0);
  for (auto [i, j] : edges) {
    ++deg[static_cast<size_t>(i)];
    ++deg[static_cast<size_t>(j)];
  }
  return deg;
}

bool NetworkGraph::is_connected() const { return unreachable_vertices().empty(); }

std::vector<int> NetworkGraph::unreachable_vertices() const {
  std::vector<std::vector<int>> adj(static_cast<size_t>(num_agents));
  for (auto [i, j] : edges) {
    adj[static_cast<size_t>(i)].push_back(j);
    adj[static_cast<size_t>(j)].push_back(i);
  }
  std::vector<char> seen(static_cast<size_t>(num_agents), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[static_cast<size_t>(v)]) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        q.push(w);
      }
    }
  }
  std::vector<int> missing;
  for (int v = 0; v < num_agents; ++v)
    if (!seen[static_cast<size_t>(v)]) missing.push_back(v);
  return missing;
}

bool NetworkGraph::has_edge(int i, int j) const {
  const auto key = std::make_pair(std::min(i, j), std::max(i, j));
  return std::binary_search(edges.begin(), edges.end(), key);
}

bool ValidationReport::all_pass() const {
  for (const auto& c : clauses)
    if (!c.pass) return false;
  return true;
}

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const auto& c : clauses) {
    out << (c.pass ? "[pass] " : "[FAIL] ") << c.name << "  margin=" << c.margin;
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
  }
  return out.str();
}

Matrix psd_sqrt(const Matrix& c) {
  const Matrix sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector vals = eig.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    // Roundoff-scale eigenvalues are clamped on both sides: negatives would
    // leave the PSD cone, positives of order 1e-16 would blow up to 1e-8
    // under the square root and pollute the null direction.
    if (vals[i] < 1e-12) vals[i] = 0.0;
    vals[i] = std::sqrt(vals[i]);
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

MixingPair assemble_mixing_pair(Matrix w, Matrix wt) {
  MixingPair pair;
  pair.W = std::move(w);
  pair.Wt = std::move(wt);
  pair.C = pair.Wt - pair.W;
  pair.sqrtC = psd_sqrt(pair.C);
  return pair;
}

MixingPair build_metropolis_weights(const NetworkGraph& graph) {
  const auto missing = graph.unreachable_vertices();
  if (!missing.empty())
    throw DisconnectedGraphError("graph is disconnected; unreachable vertices: " + join_ints(missing),
                                 missing);
  const int n = graph.num_agents;
  const auto deg = graph.degrees();
  Matrix w = Matrix::Zero(n, n);
  for (auto [i, j] : graph.edges) {
    const double v = 1.0 / (std::max(deg[static_cast<size_t>(i)], deg[static_cast<size_t>(j)]) + 1.0);
    w(i, j) = v;
    w(j, i) = v;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  Matrix wt = 0.5 * (Matrix::Identity(n, n) + w);
  return assemble_mixing_pair(std::move(w), std::move(wt));
}

double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("spectral_radius: non-finite entries");
  Eigen::EigenSolver<Matrix> eig(m, /*computeEigenvectors=*/false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  return eig.eigenvalues().minCoeff();
}

}  // namespace

ValidationReport validate_mixing_assumptions(const MixingPair& pair, const NetworkGraph& graph) {
  const int n = graph.num_agents;
  if (pair.W.rows() != n || pair.W.cols() != n || pair.Wt.rows() != n || pair.Wt.cols() != n)
    throw std::invalid_argument("validate_mixing_assumptions: shapes inconsistent with agent count");

  ValidationReport report;

  // (a) zero weight off the network
  double off = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !graph.has_edge(i, j)) off = std::max(off, std::max(std::abs(pair.W(i, j)), std::abs(pair.Wt(i, j))));
  report.clauses.push_back({"a_network_sparsity", off <= 1e-12, 1e-12 - off,
                            "max |weight| off the edge set = " + std::to_string(off)});

  // (b) doubly stochastic
  const Vector ones = Vector::Ones(n);
  double dev = 0.0;
  dev = std::max(dev, (pair.W * ones - ones).cwiseAbs().maxCoeff());
  dev = std::max(dev, (pair.W.transpose() * ones - ones).cwiseAbs().maxCoeff());
  dev = std::max(dev, (pair.Wt * ones - ones).cwiseAbs().maxCoeff());
  dev = std::max(dev, (pair.Wt.transpose() * ones - ones).cwiseAbs().maxCoeff());
  report.clauses.push_back({"b_double_stochasticity", dev <= 1e-12, 1e-12 - dev,
                            "max row/col sum deviation = " + std::to_string(dev)});

  // (c) null(C) = span{1}
  Eigen::SelfAdjointEigenSolver<Matrix> ceig(0.5 * (pair.C + pair.C.transpose()));
  const Vector cvals = ceig.eigenvalues();
  int null_dim = 0;
  for (int i = 0; i < n; ++i)
    if (cvals[i] <= 1e-10) ++null_dim;
  const double lambda2 = n >= 2 ? cvals[1] : 0.0;
  const double c_ones = (pair.C * ones).cwiseAbs().maxCoeff();
  const bool c_pass = (null_dim == 1) && (n < 2 || lambda2 > 1e-10) && c_ones <= 1e-12;
  report.clauses.push_back({"c_nullspace", c_pass, lambda2 - 1e-10,
                            "second-smallest eigenvalue of C = " + std::to_string(lambda2) +
                                ", null dimension = " + std::to_string(null_dim)});

  // (d) Wt > 0 and (I+W)/2 >= Wt >= W
  const Matrix ihalf = 0.5 * (Matrix::Identity(n, n) + pair.W);
  const double e1 = min_eigenvalue(pair.Wt);
  const double e2 = min_eigenvalue(ihalf - pair.Wt);
  const double e3 = min_eigenvalue(pair.Wt - pair.W);
  const double emin = std::min({e1, e2, e3});
  report.clauses.push_back({"d_spectral_ordering", emin >= -1e-10, emin,
                            "min eigenvalues: Wt = " + std::to_string(e1) + ", (I+W)/2-Wt = " +
                                std::to_string(e2) + ", Wt-W = " + std::to_string(e3)});

  // (e) sqrtC is a symmetric PSD square root of C
  const double sq_res = fro(pair.sqrtC * pair.sqrtC - pair.C);
  const double sym_res = fro(pair.sqrtC - pair.sqrtC.transpose());
  const double sq_min = min_eigenvalue(pair.sqrtC);
  const bool e_pass = sq_res <= 1e-10 && sym_res <= 1e-12 && sq_min >= -1e-12;
  report.clauses.push_back({"e_sqrt_factor", e_pass, 1e-10 - sq_res,
                            "|sqrtC^2 - C|_F = " + std::to_string(sq_res)});

  return report;
}

void export_mixing_csv(const MixingPair& pair, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto dump = [&](const Matrix& m, const std::string& name) {
    std::ofstream out(dir + "/" + name + ".csv");
    if (!out) throw ConfigError("cannot write " + dir + "/" + name + ".csv");
    char buf[64];
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
        out << buf << (j + 1 == m.cols() ? "\n" : ",");
      }
    }
  };
  dump(pair.W, "W");
  dump(pair.Wt, "Wt");
  dump(pair.C, "C");
  dump(pair.sqrtC, "sqrtC");
}

}  // namespace pcor
