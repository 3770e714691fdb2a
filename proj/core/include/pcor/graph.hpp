#pragma once

#include "pcor/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace pcor {

// Undirected simple graph over agents 0..num_agents-1. Edges are stored once
// as (i, j) with i < j; the edge set is symmetric by construction.
struct NetworkGraph {
  int num_agents = 0;
  std::vector<std::pair<int, int>> edges;

  static NetworkGraph from_edges(int num_agents, std::vector<std::pair<int, int>> edges);
  static NetworkGraph path(int num_agents);
  static NetworkGraph complete(int num_agents);

  // Agents dropped uniformly in the unit square (given seed); connect pairs
  // within the smallest radius from the grid {0.05, 0.10, ...} that yields a
  // connected graph. Deterministic for a fixed seed.
  static NetworkGraph random_geometric(int num_agents, std::uint64_t seed);

  // Text format: first line "N", then one "i j" pair per line, 1-based.
  static NetworkGraph load_edge_list(const std::string& path);
  static NetworkGraph parse_edge_list(std::istream& in, const std::string& origin);
  void save_edge_list(const std::string& path) const;

  std::vector<int> degrees() const;
  bool is_connected() const;
  // Vertices (0-based) not reachable from vertex 0.
  std::vector<int> unreachable_vertices() const;
  bool has_edge(int i, int j) const;
};

class DisconnectedGraphError : public NumericalError {
 public:
  DisconnectedGraphError(std::string what, std::vector<int> unreachable)
      : NumericalError(std::move(what)), unreachable(std::move(unreachable)) {}
  std::vector<int> unreachable;
};

// Mixing matrices for the network: W and Wt (written W~ in comments) are
// doubly stochastic and network-sparse, C = W~ - W is positive semidefinite
// with null space span{1}, and sqrtC is its symmetric PSD square root.
struct MixingPair {
  Matrix W;
  Matrix Wt;
  Matrix C;
  Matrix sqrtC;

  int size() const { return static_cast<int>(W.rows()); }
};

struct ClauseResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // measured eigenvalue / deviation slack for the clause
  std::string detail;
};

struct ValidationReport {
  std::vector<ClauseResult> clauses;
  bool all_pass() const;
  std::string to_string() const;
};

// Metropolis rule: w_ij = 1/(max{deg(i),deg(j)}+1) on edges, diagonal fills
// the row to 1; W~ = (I+W)/2. Throws DisconnectedGraphError if the graph is
// not connected.
MixingPair build_metropolis_weights(const NetworkGraph& graph);

// Builds the derived matrices (C, sqrtC) for an externally supplied W, W~.
MixingPair assemble_mixing_pair(Matrix w, Matrix wt);

// Pass/fail per requirement clause with measured margins:
//   a: network sparsity, b: double stochasticity, c: null(C) = span{1},
//   d: W~ > 0 and (I+W)/2 >= W~ >= W, e: sqrtC * sqrtC = C, sqrtC sym. PSD.
ValidationReport validate_mixing_assumptions(const MixingPair& pair, const NetworkGraph& graph);

// Largest absolute eigenvalue of a square matrix. Throws on non-square input.
double spectral_radius(const Matrix& m);

// Symmetric PSD square root via eigendecomposition; eigenvalues in
// [-1e-12, 0) are clamped to 0 (the input is PSD only up to roundoff).
Matrix psd_sqrt(const Matrix& c);

// Row-major CSV with 17 significant digits, one file per matrix
// (W.csv, Wt.csv, C.csv, sqrtC.csv) under `dir`.
void export_mixing_csv(const MixingPair& pair, const std::string& dir);

}  // namespace pcor
