#include "confdi/dynamics.hpp"

#include <set>

#include "confdi/spectral.hpp"

namespace confdi {

ConsensusSystem build_system(const WeightedDigraph& g, double kappa) {
  if (!is_strongly_connected(g))
    throw NotStronglyConnected("graph is not strongly connected");
  Eigen::MatrixXd L = laplacian(g);
  const double max_diag = L.diagonal().maxCoeff();
  if (!(kappa > 0.0) || !(kappa < 1.0 / max_diag))
    throw KappaOutOfRange("kappa must lie in (0, " +
                          std::to_string(1.0 / max_diag) + ")");
  const int n = g.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - kappa * L;
  return ConsensusSystem(g, kappa, std::move(L), std::move(A));
}

Eigen::MatrixXd disconnect_edge(const ConsensusSystem& sys, int tail,
                                int head) {
  if (!sys.graph().has_arc(tail, head))
    throw NoSuchArc("no arc (" + std::to_string(tail) + "," +
                    std::to_string(head) + ")");
  const int n = sys.size();
  const double l_hr = sys.laplacian()(head - 1, tail - 1);  // < 0
  Eigen::VectorXd eh = Eigen::VectorXd::Unit(n, head - 1);
  Eigen::VectorXd er = Eigen::VectorXd::Unit(n, tail - 1);
  return sys.state_matrix() -
         sys.kappa() * l_hr * eh * (eh - er).transpose();
}

Eigen::MatrixXd disconnect_edge_undirected(const ConsensusSystem& sys, int a,
                                           int b) {
  const WeightedDigraph& g = sys.graph();
  if (!g.has_arc(a, b) || !g.has_arc(b, a))
    throw NoSuchArc("edge {" + std::to_string(a) + "," + std::to_string(b) +
                    "} is not bidirectional");
  if (g.weight(a, b) != g.weight(b, a))
    throw AsymmetricWeights("edge {" + std::to_string(a) + "," +
                            std::to_string(b) + "} has asymmetric weights");
  const int n = sys.size();
  const double l_hr = sys.laplacian()(b - 1, a - 1);
  Eigen::VectorXd d = Eigen::VectorXd::Unit(n, b - 1) -
                      Eigen::VectorXd::Unit(n, a - 1);
  return sys.state_matrix() - sys.kappa() * l_hr * d * d.transpose();
}

FaultSchedule::FaultSchedule(const WeightedDigraph& base,
                             std::vector<FaultEvent> events)
    : events_(std::move(events)) {
  int prev_time = 0;
  bool arc_out = false;
  std::pair<int, int> out_arc{0, 0};
  for (const FaultEvent& e : events_) {
    if (e.time < prev_time)
      throw ScheduleInvalid("event times must be non-decreasing");
    prev_time = e.time;
    if (e.time < 0) throw ScheduleInvalid("event time must be >= 0");
    if (!base.has_arc(e.tail, e.head))
      throw ScheduleInvalid("event arc (" + std::to_string(e.tail) + "," +
                            std::to_string(e.head) +
                            ") is not in the base graph");
    if (e.action == FaultAction::Disconnect) {
      if (arc_out)
        throw ScheduleInvalid("at most one arc may be disconnected at a time");
      arc_out = true;
      out_arc = {e.tail, e.head};
    } else {
      if (!arc_out || out_arc != std::make_pair(e.tail, e.head))
        throw ScheduleInvalid("restore targets an arc that is not out");
      arc_out = false;
    }
  }
}

Trajectory simulate(const ConsensusSystem& sys, const Eigen::VectorXd& x0,
                    const FaultSchedule& schedule, int horizon,
                    bool require_connectivity) {
  if (x0.size() != sys.size())
    throw InvalidInput("initial state has wrong dimension");
  if (horizon < 0) throw InvalidInput("horizon must be >= 0");

  Trajectory traj;
  traj.states.reserve(static_cast<size_t>(horizon) + 1);
  traj.matrix_tags.reserve(static_cast<size_t>(horizon) + 1);
  traj.states.push_back(x0);
  traj.matrix_tags.emplace_back("init");

  Eigen::MatrixXd current = sys.state_matrix();
  std::string tag = "A";
  size_t next_event = 0;
  const auto& events = schedule.events();

  for (int t = 0; t < horizon; ++t) {
    while (next_event < events.size() && events[next_event].time == t) {
      const FaultEvent& e = events[next_event++];
      if (e.action == FaultAction::Disconnect) {
        current = disconnect_edge(sys, e.tail, e.head);
        tag = "Abar_" + std::to_string(e.head) + "_" + std::to_string(e.tail);
        if (!is_strongly_connected(sys.graph().without_arc(e.tail, e.head))) {
          if (require_connectivity)
            throw ScheduleInvalid("fault disconnects the graph at t=" +
                                  std::to_string(t));
          traj.connectivity_lost = true;
        }
      } else {
        current = sys.state_matrix();
        tag = "A";
      }
    }
    traj.states.push_back(current * traj.states.back());
    traj.matrix_tags.push_back(tag);
  }
  return traj;
}

double consensus_value(const ConsensusSystem& sys, const Eigen::VectorXd& x0) {
  return left_perron_vector(sys.state_matrix()).dot(x0);
}

}  // namespace confdi
