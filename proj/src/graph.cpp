#include "confdi/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <string>

namespace confdi {

WeightedDigraph::WeightedDigraph(int n, std::vector<Arc> arcs)
    : n_(n), arcs_(std::move(arcs)), adj_(Eigen::MatrixXd::Zero(n, n)) {
  if (n_ < 2) throw InvalidInput("vertex count must be at least 2");
  std::set<std::pair<int, int>> seen;
  for (const Arc& a : arcs_) {
    if (a.tail < 1 || a.tail > n_ || a.head < 1 || a.head > n_)
      throw InvalidInput("arc endpoint out of range: (" +
                         std::to_string(a.tail) + "," +
                         std::to_string(a.head) + ")");
    if (a.tail == a.head) throw InvalidInput("self-loops are not allowed");
    if (!(a.weight > 0.0))
      throw InvalidInput("arc weights must be strictly positive");
    if (!seen.insert({a.tail, a.head}).second)
      throw InvalidInput("duplicate arc (" + std::to_string(a.tail) + "," +
                         std::to_string(a.head) + ")");
    adj_(a.head - 1, a.tail - 1) = a.weight;
  }
}

bool WeightedDigraph::has_arc(int tail, int head) const {
  if (tail < 1 || tail > n_ || head < 1 || head > n_) return false;
  return adj_(head - 1, tail - 1) != 0.0;
}

double WeightedDigraph::weight(int tail, int head) const {
  if (!has_arc(tail, head)) return 0.0;
  return adj_(head - 1, tail - 1);
}

std::vector<int> WeightedDigraph::in_neighbors(int head) const {
  std::vector<int> result;
  for (int j = 1; j <= n_; ++j)
    if (has_arc(j, head)) result.push_back(j);
  return result;
}

WeightedDigraph WeightedDigraph::without_arc(int tail, int head) const {
  if (!has_arc(tail, head))
    throw NoSuchArc("no arc (" + std::to_string(tail) + "," +
                    std::to_string(head) + ")");
  std::vector<Arc> remaining;
  remaining.reserve(arcs_.size() - 1);
  for (const Arc& a : arcs_)
    if (!(a.tail == tail && a.head == head)) remaining.push_back(a);
  return WeightedDigraph(n_, std::move(remaining));
}

WeightedDigraph WeightedDigraph::without_edge_undirected(int a, int b) const {
  if (!has_arc(a, b) || !has_arc(b, a))
    throw NoSuchArc("edge {" + std::to_string(a) + "," + std::to_string(b) +
                    "} is not bidirectional");
  if (weight(a, b) != weight(b, a))
    throw AsymmetricWeights("edge {" + std::to_string(a) + "," +
                            std::to_string(b) + "} has asymmetric weights");
  return without_arc(a, b).without_arc(b, a);
}

void Partition::validate(int n) const {
  std::vector<char> covered(static_cast<size_t>(n), 0);
  for (const auto& cell : cells) {
    if (cell.empty()) throw InvalidInput("partition cell is empty");
    for (int v : cell) {
      if (v < 1 || v > n) throw InvalidInput("partition vertex out of range");
      if (covered[static_cast<size_t>(v - 1)])
        throw InvalidInput("partition cells are not disjoint");
      covered[static_cast<size_t>(v - 1)] = 1;
    }
  }
  for (char c : covered)
    if (!c) throw InvalidInput("partition does not cover the vertex set");
}

int Partition::cell_of(int vertex) const {
  for (size_t i = 0; i < cells.size(); ++i)
    for (int v : cells[i])
      if (v == vertex) return static_cast<int>(i);
  throw InvalidInput("vertex not in partition");
}

Eigen::MatrixXd laplacian(const WeightedDigraph& g) {
  const int n = g.size();
  const Eigen::MatrixXd& w = g.adjacency();
  Eigen::MatrixXd L = -w;
  // Diagonal as negated off-diagonal row sum so that L*1 = 0 bit-exactly.
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) s += L(i, j);
    L(i, i) = -s;
  }
  return L;
}

namespace {

// Vertices (0-based) reachable from `start` following arcs in the given
// direction. forward: tail -> head.
std::vector<char> reachable(const WeightedDigraph& g, int start, bool forward) {
  const int n = g.size();
  const Eigen::MatrixXd& adj = g.adjacency();
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::deque<int> queue{start};
  seen[static_cast<size_t>(start)] = 1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v = 0; v < n; ++v) {
      double w = forward ? adj(v, u) : adj(u, v);
      if (w != 0.0 && !seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

bool is_strongly_connected(const WeightedDigraph& g) {
  auto fwd = reachable(g, 0, true);
  auto bwd = reachable(g, 0, false);
  for (int v = 0; v < g.size(); ++v)
    if (!fwd[static_cast<size_t>(v)] || !bwd[static_cast<size_t>(v)])
      return false;
  return true;
}

bool is_almost_equitable(const WeightedDigraph& g, const Partition& p,
                         double tol) {
  p.validate(g.size());
  const int k = static_cast<int>(p.cells.size());
  if (k <= 1 || k >= g.size())
    throw TrivialPartition("partition must have 1 < k < N cells");
  const Eigen::MatrixXd& w = g.adjacency();
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      double ref = 0.0;
      bool first = true;
      for (int v : p.cells[static_cast<size_t>(i)]) {
        double s = 0.0;
        for (int u : p.cells[static_cast<size_t>(j)]) s += w(v - 1, u - 1);
        if (first) {
          ref = s;
          first = false;
        } else if (std::abs(s - ref) > tol) {
          return false;
        }
      }
    }
  }
  return true;
}

QuotientLaplacian quotient_laplacian(const WeightedDigraph& g,
                                     const Partition& p, double tol) {
  if (!is_almost_equitable(g, p, tol))
    throw NotAlmostEquitable("partition is not almost equitable");
  const int k = static_cast<int>(p.cells.size());
  const Eigen::MatrixXd L = laplacian(g);
  QuotientLaplacian q;
  q.k = k;
  q.matrix = Eigen::MatrixXd::Zero(k, k);
  q.cell_map.assign(static_cast<size_t>(g.size()), -1);
  for (int i = 0; i < k; ++i)
    for (int v : p.cells[static_cast<size_t>(i)])
      q.cell_map[static_cast<size_t>(v - 1)] = i;
  for (int i = 0; i < k; ++i) {
    const int v = p.cells[static_cast<size_t>(i)].front();  // any cell member
    double diag = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      double dij = 0.0;
      for (int u : p.cells[static_cast<size_t>(j)]) dij += L(v - 1, u - 1);
      q.matrix(i, j) = dij;
      diag -= dij;
    }
    q.matrix(i, i) = diag;
  }
  return q;
}

Eigen::MatrixXd characteristic_matrix(const Partition& p, int n) {
  p.validate(n);
  const int k = static_cast<int>(p.cells.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < k; ++i)
    for (int v : p.cells[static_cast<size_t>(i)]) P(v - 1, i) = 1.0;
  return P;
}

std::vector<Arc> cell_edge_pairs(const Partition& p, const WeightedDigraph& g) {
  p.validate(g.size());
  std::vector<Arc> result;
  for (const Arc& a : g.arcs())
    if (p.cell_of(a.tail) == p.cell_of(a.head)) result.push_back(a);
  return result;
}

}  // namespace confdi
