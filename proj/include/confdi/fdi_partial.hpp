#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "confdi/dynamics.hpp"

namespace confdi {

// Relative misfit tolerance for the hypothesis-bank identification.
inline constexpr double kTolFit = 1e-6;
// Maximum allowed condition number of the canonical-form transformation.
inline constexpr double kMaxCondition = 1e12;

// Dead-beat observer for (A, [I_p 0]): A + G [I_p 0] is nilpotent with
// index tau0.
struct DeadBeatObserver {
  int p = 0;
  Eigen::MatrixXd G;  // N x p gain
  int tau0 = 0;
  Eigen::MatrixXd A;  // plant matrix the observer was designed for
  double condition_number = 0.0;  // of the canonical-form transformation
};

struct ObserverRun {
  std::vector<Eigen::VectorXd> xhat_states;  // xhat(0..T)
  std::vector<Eigen::VectorXd> residuals;    // r(t) = [I_p 0] xhat(t) - y(t)
  std::vector<bool> detection_signal;        // d(t) = (||r(t)||_inf > eps)
};

// Dead-beat design via the multi-output observability canonical form with
// greedy (cyclic) observability-index selection. Throws NotObservable, and
// IllConditionedTransform when the transformation is numerically unusable.
DeadBeatObserver design_deadbeat(const ConsensusSystem& sys, int p);

// xhat(0) = 0; xhat(t+1) = A xhat(t) - G (y(t) - [I_p 0] xhat(t)).
ObserverRun run_observer(const DeadBeatObserver& obs,
                         const std::vector<Eigen::VectorXd>& y_stream,
                         double eps);

// First rising edge of the detection signal at or after tau0 (detections
// during the observer transient are suppressed), strictly after `from`.
std::optional<int> first_detection(const ObserverRun& run,
                                   const DeadBeatObserver& obs, int from = -1);

struct PartialIdentifiabilityReport {
  bool identifiable = false;
  std::vector<Arc> candidates;  // arcs whose removal keeps strong connectivity
  std::vector<std::string> failures;
};

// Evaluates, over all candidate arcs, discernibility-from-p, observability of
// the faulty pair, and pairwise disjointness of the faulty spectra.
PartialIdentifiabilityReport check_identifiability_partial(
    const ConsensusSystem& sys, int p);

// 2N x 2N composite of the observer closed loop and a candidate faulty plant
// (arc tail -> head removed).
Eigen::MatrixXd composite_matrix(const DeadBeatObserver& obs,
                                 const ConsensusSystem& sys, int tail,
                                 int head);

struct PartialIdentification {
  enum class Kind { NoFault, Identified, Ambiguous };
  Kind kind = Kind::NoFault;
  Arc edge;                     // set when identified
  std::vector<Arc> candidates;  // consistent candidates when ambiguous
  std::vector<double> misfits;  // relative misfit per tested candidate arc
  std::vector<Arc> tested;
};

// Hypothesis-bank identification: each candidate arc is scored by the
// least-squares misfit of the best initial-state explanation of the residual
// window [detection_time-1, detection_time-1+4N]. Throws WindowTooShort.
PartialIdentification identify_partial(const DeadBeatObserver& obs,
                                       const ConsensusSystem& sys,
                                       const ObserverRun& run,
                                       int detection_time, double eps);

}  // namespace confdi
