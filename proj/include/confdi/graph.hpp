#pragma once

#include <Eigen/Dense>
#include <vector>

#include "confdi/errors.hpp"

namespace confdi {

// Absolute tolerance for partition / commutation checks.
inline constexpr double kTolEq = 1e-9;

// A weighted arc. Vertex indices are 1-based everywhere in the public API,
// matching the usual [1,N] labelling of agents.
struct Arc {
  int tail = 0;
  int head = 0;
  double weight = 1.0;
};

inline bool same_arc(const Arc& a, const Arc& b) {
  return a.tail == b.tail && a.head == b.head;
}

// Directed weighted graph with no self-loops, strictly positive weights and
// at most one arc per ordered vertex pair. Immutable after construction.
class WeightedDigraph {
 public:
  WeightedDigraph(int n, std::vector<Arc> arcs);

  int size() const { return n_; }
  const std::vector<Arc>& arcs() const { return arcs_; }

  // adjacency()(i,j) is the weight of the arc (j+1) -> (i+1), zero if absent.
  const Eigen::MatrixXd& adjacency() const { return adj_; }

  bool has_arc(int tail, int head) const;
  double weight(int tail, int head) const;

  // Tails of arcs pointing into `head`, sorted ascending.
  std::vector<int> in_neighbors(int head) const;

  WeightedDigraph without_arc(int tail, int head) const;
  // Removes both arcs of an undirected edge {a,b}; requires equal weights.
  WeightedDigraph without_edge_undirected(int a, int b) const;

 private:
  int n_;
  std::vector<Arc> arcs_;
  Eigen::MatrixXd adj_;
};

// A partition of the vertex set [1,N] into disjoint non-empty cells.
struct Partition {
  std::vector<std::vector<int>> cells;

  // Throws InvalidInput unless the cells partition [1,n].
  void validate(int n) const;
  int cell_of(int vertex) const;
};

struct QuotientLaplacian {
  int k = 0;
  Eigen::MatrixXd matrix;
  std::vector<int> cell_map;  // cell_map[v-1] = 0-based cell index of vertex v
};

Eigen::MatrixXd laplacian(const WeightedDigraph& g);

// Graph-search test (BFS on forward and reverse arcs), not spectral.
bool is_strongly_connected(const WeightedDigraph& g);

// Throws TrivialPartition if the partition has 1 cell or N cells.
bool is_almost_equitable(const WeightedDigraph& g, const Partition& p,
                         double tol = kTolEq);

// Throws NotAlmostEquitable if the partition fails the cell-sum condition.
QuotientLaplacian quotient_laplacian(const WeightedDigraph& g,
                                     const Partition& p, double tol = kTolEq);

// N x k 0/1 matrix whose i-th column is the characteristic vector of cell i.
Eigen::MatrixXd characteristic_matrix(const Partition& p, int n);

// Arcs of g whose endpoints lie in the same cell of p.
std::vector<Arc> cell_edge_pairs(const Partition& p, const WeightedDigraph& g);

}  // namespace confdi
