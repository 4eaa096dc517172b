#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "confdi/dynamics.hpp"

namespace confdi {

// Eigenvalues closer than this are treated as shared between two matrices.
inline constexpr double kTolShared = 1e-7;
// Witness component-coincidence tolerance.
inline constexpr double kTolWitness = 1e-7;

enum class ObservationMode { FullState, Partial };

// An eigenpair violating a discernibility test. For partial-observation
// verdicts `v_faulty` carries the faulty-system half of the kernel vector.
struct DiscernibilityWitness {
  std::complex<double> lambda;
  Eigen::VectorXcd v;
  Eigen::VectorXcd v_faulty;  // empty in full-state mode
};

struct DiscernibilityVerdict {
  int tail = 0;
  int head = 0;
  ObservationMode mode = ObservationMode::FullState;
  int p = 0;  // observed count, 0 in full-state mode
  bool discernible = false;
  std::vector<DiscernibilityWitness> witnesses;
  // Eigenvalues in sigma(A) ∩ sigma(Abar) other than 1.
  std::vector<std::complex<double>> shared_spectrum;
  // Smallest margin by which the test passed (component gap or rank gap).
  double margin = 0.0;
};

struct SharedEigenpair {
  std::complex<double> lambda;
  Eigen::VectorXcd v;
  bool trivial = false;  // lambda ~ 1 with v in span{1}
};

// Full-state test: not discernible iff some eigenpair of A
// with lambda != 1 has equal tail/head components (or a non-unit eigenvalue
// has geometric multiplicity > 1). Throws FaultDisconnectsGraph.
DiscernibilityVerdict discernible_full(const ConsensusSystem& sys, int tail,
                                       int head);

// Partial-state test from the first p states. Throws AssumptionViolated when
// either pair (A,[I_p 0]) or (Abar,[I_p 0]) is unobservable, and
// FaultDisconnectsGraph when the faulty graph loses strong connectivity.
DiscernibilityVerdict discernible_partial(const ConsensusSystem& sys, int tail,
                                          int head, int p);

struct PbhResult {
  bool observable = false;
  std::vector<std::complex<double>> unobservable_eigenvalues;
};

// PBH rank test of the pair (M, [I_p 0]).
PbhResult pbh_observable(const Eigen::MatrixXd& M, int p);

// All eigenpairs common to M1 and M2 within the shared-eigenvalue tolerance.
std::vector<SharedEigenpair> shared_eigenstructure(const Eigen::MatrixXd& M1,
                                                   const Eigen::MatrixXd& M2);

struct AuditEntry {
  Arc arc;
  // Unset when the arc's removal disconnects the graph.
  std::optional<DiscernibilityVerdict> verdict;
  std::string status;  // "ok" or "fault-disconnects-graph"
};

// Verdict per arc of the system's graph; arcs whose removal disconnects the
// graph are reported with a status instead of a verdict.
std::vector<AuditEntry> audit_graph(const ConsensusSystem& sys,
                                    ObservationMode mode, int p = 0);

}  // namespace confdi
