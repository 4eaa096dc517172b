#pragma once

#include <Eigen/Dense>
#include <optional>
#include <set>
#include <vector>

#include "confdi/dynamics.hpp"

namespace confdi {

// Default residual threshold for noise-free simulation.
inline constexpr double kDefaultEps = 1e-9;
// Collinearity tolerance for head identification.
inline constexpr double kTolDirection = 1e-6;
// Absolute tolerance on the candidate-set state equation.
inline constexpr double kTolIdent = 1e-6;

// Full-state residual generator: W*A = Jtilde*W with W = [0 I] T^{-1}.
struct ResidualProjector {
  Eigen::MatrixXd W;       // (N-1) x N
  Eigen::MatrixXd Jtilde;  // (N-1) x (N-1)
};

// Throws RepeatedEigenvalue when the spectrum is not simple.
ResidualProjector build_projector(const ConsensusSystem& sys);

// r(t) = W x(t) - Jtilde W x(t-1); identically zero on healthy steps.
Eigen::VectorXd residual(const ResidualProjector& proj,
                         const Eigen::VectorXd& x_t,
                         const Eigen::VectorXd& x_prev);

// First t >= 1 with ||r(t)||_inf > eps, or nullopt.
std::optional<int> detect(const ResidualProjector& proj, const Trajectory& traj,
                          double eps = kDefaultEps);

struct HeadMatch {
  int head = 0;
  double coefficient = 0.0;  // least-squares coefficient on W e_head
};

// The unique vertex h with r_vec collinear to W e_h. Throws NoDirectionMatch
// when no column direction matches within the collinearity tolerance.
HeadMatch identify_head(const ResidualProjector& proj,
                        const Eigen::VectorXd& r_vec);

struct IdentificationTrace {
  int detection_time = 0;  // first t with ||r(t)||_inf > eps
  int k_star = 0;          // offset of the first nonzero residual (unknown
                           // fault time => equals detection_time when tau=t-1)
  int head = 0;
  std::vector<double> c_values;
  std::vector<std::set<int>> candidate_sets;  // R_k intersections, per step
  std::optional<int> tail;                    // unset => ambiguous
  std::set<int> ambiguous_set;
};

// Two-stage identification: head from the residual direction, then tail by
// intersecting per-step candidate sets R_k over at most 2N steps.
IdentificationTrace identify_tail(const ResidualProjector& proj,
                                  const ConsensusSystem& sys,
                                  const Trajectory& traj, int detection_time);

struct IdentifiabilityReport {
  bool identifiable = false;
  // Pairs of in-neighbors (j, j') for which a hypothesis fails, with reason.
  std::vector<std::string> failures;
};

// Checks, for every pair of distinct in-neighbors of `head`, that each
// single-arc fault keeps the graph strongly connected and discernible and
// that the faulty spectra intersect only in {1}.
IdentifiabilityReport check_identifiability_full(const ConsensusSystem& sys,
                                                 int head);

}  // namespace confdi
