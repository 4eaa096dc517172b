#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "confdi/graph.hpp"

namespace confdi {

// Discrete-time consensus system x(t+1) = (I - kappa*L) x(t) over a strongly
// connected weighted digraph. Immutable after construction.
class ConsensusSystem {
 public:
  const WeightedDigraph& graph() const { return graph_; }
  double kappa() const { return kappa_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  const Eigen::MatrixXd& state_matrix() const { return A_; }
  int size() const { return graph_.size(); }

  friend ConsensusSystem build_system(const WeightedDigraph& g, double kappa);

 private:
  ConsensusSystem(WeightedDigraph g, double kappa, Eigen::MatrixXd L,
                  Eigen::MatrixXd A)
      : graph_(std::move(g)),
        kappa_(kappa),
        laplacian_(std::move(L)),
        A_(std::move(A)) {}

  WeightedDigraph graph_;
  double kappa_;
  Eigen::MatrixXd laplacian_;
  Eigen::MatrixXd A_;
};

// Throws NotStronglyConnected or KappaOutOfRange (bound is
// 0 < kappa < 1/max_i L_ii, both ends exclusive).
ConsensusSystem build_system(const WeightedDigraph& g, double kappa);

// State matrix after removing the arc tail -> head (rank-one update of A).
Eigen::MatrixXd disconnect_edge(const ConsensusSystem& sys, int tail,
                                int head);

// Symmetric update removing both arcs of the undirected edge {a,b}.
Eigen::MatrixXd disconnect_edge_undirected(const ConsensusSystem& sys, int a,
                                           int b);

enum class FaultAction { Disconnect, Restore };

struct FaultEvent {
  int time = 0;
  FaultAction action = FaultAction::Disconnect;
  int tail = 0;
  int head = 0;
};

// Time-ordered single-fault schedule, validated against a base graph:
// a Disconnect targets a present arc, a Restore the currently absent one,
// and at most one arc is disconnected at any time.
class FaultSchedule {
 public:
  FaultSchedule() = default;
  FaultSchedule(const WeightedDigraph& base, std::vector<FaultEvent> events);
  const std::vector<FaultEvent>& events() const { return events_; }
  bool empty() const { return events_.empty(); }

 private:
  std::vector<FaultEvent> events_;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;    // x(0..T)
  std::vector<std::string> matrix_tags;   // tags[t] = matrix producing x(t); tags[0] = "init"
  // True when some disconnection left the graph not strongly connected.
  bool connectivity_lost = false;
};

// Events at time tau switch the matrix applied to the step x(tau)->x(tau+1).
// With require_connectivity the run aborts (ScheduleInvalid) if a fault
// disconnects the graph; by default this is only recorded on the trajectory.
Trajectory simulate(const ConsensusSystem& sys, const Eigen::VectorXd& x0,
                    const FaultSchedule& schedule, int horizon,
                    bool require_connectivity = false);

// w_A^T x0, the limit of the healthy trajectory.
double consensus_value(const ConsensusSystem& sys, const Eigen::VectorXd& x0);

}  // namespace confdi
