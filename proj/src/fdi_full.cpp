#include "confdi/fdi_full.hpp"

#include <algorithm>
#include <cmath>

#include "confdi/discernibility.hpp"
#include "confdi/spectral.hpp"

namespace confdi {

ResidualProjector build_projector(const ConsensusSystem& sys) {
  const int n = sys.size();
  RealBlockForm form = real_block_form(sys.state_matrix());
  Eigen::MatrixXd Tinv = form.T.inverse();
  ResidualProjector proj;
  proj.W = Tinv.bottomRows(n - 1);
  proj.Jtilde = form.J.bottomRightCorner(n - 1, n - 1);
  double err =
      (proj.W * sys.state_matrix() - proj.Jtilde * proj.W).cwiseAbs().maxCoeff();
  if (err > 1e-9)
    throw ConvergenceFailure("projector identity residual " +
                             std::to_string(err));
  return proj;
}

Eigen::VectorXd residual(const ResidualProjector& proj,
                         const Eigen::VectorXd& x_t,
                         const Eigen::VectorXd& x_prev) {
  return proj.W * x_t - proj.Jtilde * (proj.W * x_prev);
}

std::optional<int> detect(const ResidualProjector& proj, const Trajectory& traj,
                          double eps) {
  for (size_t t = 1; t < traj.states.size(); ++t) {
    Eigen::VectorXd r = residual(proj, traj.states[t], traj.states[t - 1]);
    if (r.cwiseAbs().maxCoeff() > eps) return static_cast<int>(t);
  }
  return std::nullopt;
}

HeadMatch identify_head(const ResidualProjector& proj,
                        const Eigen::VectorXd& r_vec) {
  const double rnorm = r_vec.norm();
  if (!(rnorm > 0.0)) throw InvalidInput("residual vector is zero");
  int best_head = 0;
  double best_cos = -1.0;
  for (int h = 1; h <= proj.W.cols(); ++h) {
    Eigen::VectorXd dir = proj.W.col(h - 1);
    double cosine = std::abs(r_vec.dot(dir)) / (rnorm * dir.norm());
    if (cosine > best_cos) {
      best_cos = cosine;
      best_head = h;
    }
  }
  if (best_cos <= 1.0 - kTolDirection)
    throw NoDirectionMatch("best collinearity " + std::to_string(best_cos) +
                           " at vertex " + std::to_string(best_head));
  Eigen::VectorXd dir = proj.W.col(best_head - 1);
  return {best_head, r_vec.dot(dir) / dir.squaredNorm()};
}

IdentificationTrace identify_tail(const ResidualProjector& proj,
                                  const ConsensusSystem& sys,
                                  const Trajectory& traj, int detection_time) {
  const int n = sys.size();
  const Eigen::MatrixXd& L = sys.laplacian();

  IdentificationTrace trace;
  trace.detection_time = detection_time;
  trace.k_star = detection_time;

  Eigen::VectorXd r0 = residual(proj, traj.states[static_cast<size_t>(detection_time)],
                                traj.states[static_cast<size_t>(detection_time - 1)]);
  HeadMatch match = identify_head(proj, r0);
  trace.head = match.head;
  const int h0 = match.head - 1;
  const Eigen::VectorXd dir = proj.W.col(h0);

  std::set<int> current;
  for (int i : sys.graph().in_neighbors(match.head)) current.insert(i);
  if (current.empty())
    throw EmptyCandidateSet("identified head has no in-neighbors");

  const int last_t = static_cast<int>(traj.states.size()) - 1;
  for (int step = 0; step < 2 * n; ++step) {
    const int t = detection_time + step;
    if (t > last_t) break;  // trajectory exhausted; report what we have
    Eigen::VectorXd r = residual(proj, traj.states[static_cast<size_t>(t)],
                                 traj.states[static_cast<size_t>(t - 1)]);
    double c = r.dot(dir) / dir.squaredNorm();
    trace.c_values.push_back(c);
    const Eigen::VectorXd& x_prev = traj.states[static_cast<size_t>(t - 1)];
    std::set<int> rk;
    for (int i : current) {
      double l_hi = L(h0, i - 1);  // < 0 for an in-neighbor
      double mismatch =
          std::abs(x_prev(i - 1) - c / (sys.kappa() * l_hi) - x_prev(h0));
      if (mismatch < kTolIdent) rk.insert(i);
    }
    current = std::move(rk);
    trace.candidate_sets.push_back(current);
    if (current.empty())
      throw EmptyCandidateSet("no candidate satisfies the state equation at "
                              "t=" + std::to_string(t));
    if (current.size() == 1) {
      trace.tail = *current.begin();
      return trace;
    }
  }
  trace.ambiguous_set = current;
  return trace;
}

IdentifiabilityReport check_identifiability_full(const ConsensusSystem& sys,
                                                 int head) {
  IdentifiabilityReport report;
  std::vector<int> neighbors = sys.graph().in_neighbors(head);

  auto arc_name = [&](int j) {
    return "(" + std::to_string(j) + "," + std::to_string(head) + ")";
  };

  std::vector<char> arc_ok(neighbors.size(), 1);
  std::vector<Eigen::MatrixXd> faulty;
  faulty.reserve(neighbors.size());
  for (size_t a = 0; a < neighbors.size(); ++a) {
    faulty.push_back(disconnect_edge(sys, neighbors[a], head));
    try {
      DiscernibilityVerdict v = discernible_full(sys, neighbors[a], head);
      if (!v.discernible) {
        arc_ok[a] = 0;
        report.failures.push_back("arc " + arc_name(neighbors[a]) +
                                  " is not discernible");
      }
    } catch (const FaultDisconnectsGraph&) {
      arc_ok[a] = 0;
      report.failures.push_back("arc " + arc_name(neighbors[a]) +
                                " disconnects the graph");
    }
  }
  std::vector<std::vector<EigenPair>> spectra;
  spectra.reserve(neighbors.size());
  for (const Eigen::MatrixXd& f : faulty) spectra.push_back(eigen_pairs(f));
  for (size_t a = 0; a < neighbors.size(); ++a) {
    for (size_t b = a + 1; b < neighbors.size(); ++b) {
      if (!arc_ok[a] || !arc_ok[b]) continue;
      for (const EigenPair& pa : spectra[a]) {
        if (std::abs(pa.value - 1.0) < kTolShared) continue;
        bool shared = std::any_of(
            spectra[b].begin(), spectra[b].end(), [&](const EigenPair& pb) {
              return std::abs(pa.value - pb.value) < kTolShared;
            });
        if (shared) {
          report.failures.push_back(
              "arcs " + arc_name(neighbors[a]) + " and " +
              arc_name(neighbors[b]) + " share eigenvalue " +
              std::to_string(pa.value.real()) +
              (pa.value.imag() != 0.0
                   ? "+" + std::to_string(pa.value.imag()) + "i"
                   : ""));
          break;
        }
      }
    }
  }
  report.identifiable = report.failures.empty();
  return report;
}

}  // namespace confdi
