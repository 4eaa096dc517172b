#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "confdi/discernibility.hpp"
#include "confdi/fdi_partial.hpp"
#include "confdi/io.hpp"
#include "confdi/spectral.hpp"
#include "test_support.hpp"

using namespace confdi;

namespace {

Eigen::MatrixXd output_matrix(int p, int n) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, n);
  C.leftCols(p).setIdentity();
  return C;
}

std::vector<Eigen::VectorXd> outputs(const Trajectory& traj, int p) {
  std::vector<Eigen::VectorXd> y;
  y.reserve(traj.states.size());
  for (const Eigen::VectorXd& x : traj.states) y.push_back(x.head(p));
  return y;
}

std::vector<int> all_detections(const ObserverRun& run,
                                const DeadBeatObserver& obs) {
  std::vector<int> out;
  int from = -1;
  while (auto td = first_detection(run, obs, from)) {
    out.push_back(*td);
    from = *td;
    while (from + 1 < static_cast<int>(run.detection_signal.size()) &&
           run.detection_signal[static_cast<size_t>(from + 1)])
      ++from;
  }
  return out;
}

}  // namespace

TEST_CASE("dead-beat design for the 7-node example") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  CHECK(obs.tau0 == 3);
  Eigen::MatrixXd closed = obs.A + obs.G * output_matrix(3, 7);
  Eigen::MatrixXd pw = Eigen::MatrixXd::Identity(7, 7);
  for (int k = 0; k < obs.tau0; ++k) pw = pw * closed;
  CHECK(pw.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(obs.condition_number < kMaxCondition);
  CHECK(nilpotency_index(closed) == 3);
}

TEST_CASE("p = N degenerates to G = -A") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 7);
  CHECK(obs.tau0 == 1);
  CHECK((obs.G + sys.state_matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unobservable sensor choice is rejected") {
  // Two decoupled-output structure: observing only vertex 1 of the K4-like
  // symmetric system leaves repeated modes unobservable.
  std::vector<Arc> arcs;
  for (int a = 1; a <= 4; ++a)
    for (int b = 1; b <= 4; ++b)
      if (a != b) arcs.push_back({a, b, 1.0});
  ConsensusSystem sym = build_system(WeightedDigraph(4, arcs), 0.2);
  CHECK_THROWS_AS(design_deadbeat(sym, 1), NotObservable);
}

TEST_CASE("observer reaches the state after tau0 on healthy runs") {
  std::mt19937 rng(61);
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  Eigen::VectorXd x0 = test::random_state(rng, 7);
  Trajectory traj = simulate(sys, x0, {}, 30);
  ObserverRun run = run_observer(obs, outputs(traj, 3), 1e-9);
  for (size_t t = 0; t < traj.states.size(); ++t) {
    if (static_cast<int>(t) >= obs.tau0) {
      CHECK((run.xhat_states[t] - traj.states[t]).cwiseAbs().maxCoeff() <
            1e-8 * x0.norm());
      CHECK_FALSE(run.detection_signal[t]);
    }
  }
  CHECK(all_detections(run, obs).empty());
}

TEST_CASE("golden simulation 1: detections at t=11 and t=22") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  std::vector<FaultInterval> faults = {{10, 14, 6, 5}, {20, 24, 5, 7}};
  Trajectory traj = simulate(sys, test::paper_x0_sim1(),
                             to_schedule(sys.graph(), faults), 60);
  ObserverRun run = run_observer(obs, outputs(traj, 3), 1e-9);
  for (int t = 3; t <= 10; ++t)
    CHECK_FALSE(run.detection_signal[static_cast<size_t>(t)]);
  CHECK(all_detections(run, obs) == std::vector<int>{11, 22});
}

TEST_CASE("golden simulation 2: first fault invisible, second at t=22") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  std::vector<FaultInterval> faults = {{10, 14, 6, 5}, {20, 24, 5, 7}};
  Trajectory traj = simulate(sys, test::paper_x0_sim2(),
                             to_schedule(sys.graph(), faults), 60);
  ObserverRun run = run_observer(obs, outputs(traj, 3), 1e-9);
  CHECK(all_detections(run, obs) == std::vector<int>{22});
}

TEST_CASE("check_identifiability_partial flags the (6,5) arc") {
  ConsensusSystem sys = test::paper_system();
  PartialIdentifiabilityReport rep = check_identifiability_partial(sys, 3);
  CHECK_FALSE(rep.identifiable);
  bool mentions = false;
  for (const std::string& f : rep.failures)
    if (f.find("(6,5)") != std::string::npos) mentions = true;
  CHECK(mentions);
}

TEST_CASE("composite matrix structure") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  Eigen::MatrixXd M = composite_matrix(obs, sys, 5, 7);
  REQUIRE(M.rows() == 14);
  CHECK(nilpotency_index(Eigen::MatrixXd(M.topLeftCorner(7, 7))) == obs.tau0);
  CHECK(M.bottomLeftCorner(7, 7).cwiseAbs().maxCoeff() == 0.0);

  // Block-triangular spectrum: {0} union sigma(Abar). The defective zero of
  // the nilpotent block smears by roughly eps^(1/tau0).
  Eigen::MatrixXd abar = disconnect_edge(sys, 5, 7);
  for (const EigenPair& p : eigen_pairs(M)) {
    bool in_union = std::abs(p.value) < 1e-4;
    for (const EigenPair& q : eigen_pairs(abar))
      if (std::abs(p.value - q.value) < 1e-6) in_union = true;
    CHECK(in_union);
  }

  // Composite run equals observer and plant run side by side.
  Eigen::VectorXd z(14);
  z << Eigen::VectorXd::Zero(7), test::paper_x0_sim1();
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(7);
  Eigen::VectorXd x = test::paper_x0_sim1();
  Eigen::MatrixXd C = output_matrix(3, 7);
  for (int t = 0; t < 10; ++t) {
    // Top half of the composite holds the estimation error xhat - x... the
    // composite state is (e, x) with e(t+1) = A_L e(t) - (A_L - Abar
    // difference acting) -- verify against direct recursion instead.
    z = M * z;
    Eigen::VectorXd y = x.head(3);
    xhat = obs.A * xhat - obs.G * (y - C * xhat);
    x = disconnect_edge(sys, 5, 7) * x;
  }
  // Bottom half is the plant.
  CHECK((z.tail(7) - x).cwiseAbs().maxCoeff() < 1e-9);
  // Gamma z reproduces the residual C xhat - y.
  Eigen::VectorXd r_direct = C * xhat - x.head(3);
  Eigen::MatrixXd Gamma = Eigen::MatrixXd::Zero(3, 14);
  Gamma.leftCols(3).setIdentity();
  Gamma.block(0, 7, 3, 3) = -Eigen::MatrixXd::Identity(3, 3);
  CHECK((Gamma * z - r_direct).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("identify_partial on a permanent (5,7) fault") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  std::vector<FaultInterval> faults = {{20, std::nullopt, 5, 7}};
  Trajectory traj = simulate(sys, test::paper_x0_sim1(),
                             to_schedule(sys.graph(), faults), 21 + 4 * 7 + 2);
  ObserverRun run = run_observer(obs, outputs(traj, 3), 1e-9);
  std::vector<int> dets = all_detections(run, obs);
  REQUIRE(!dets.empty());
  CHECK(dets.front() == 22);
  PartialIdentification id = identify_partial(obs, sys, run, dets.front(), 1e-9);
  REQUIRE(id.kind == PartialIdentification::Kind::Identified);
  CHECK(id.edge.tail == 5);
  CHECK(id.edge.head == 7);
  // Every other tested candidate is strictly inconsistent.
  for (size_t i = 0; i < id.tested.size(); ++i) {
    if (id.tested[i].tail == 5 && id.tested[i].head == 7)
      CHECK(id.misfits[i] < kTolFit);
    else
      CHECK(id.misfits[i] > kTolFit);
  }
}

TEST_CASE("identify_partial edge cases") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  Trajectory healthy = simulate(sys, test::paper_x0_sim1(), {}, 60);
  ObserverRun run = run_observer(obs, outputs(healthy, 3), 1e-9);
  PartialIdentification id = identify_partial(obs, sys, run, 10, 1e-9);
  CHECK(id.kind == PartialIdentification::Kind::NoFault);
  CHECK_THROWS_AS(identify_partial(obs, sys, run, 55, 1e-9), WindowTooShort);
}

TEST_CASE("a graph symmetry hiding in the unobserved vertices is rejected") {
  // Swapping 4 and 5 is an automorphism fixing the observed set {1,2,3}, so
  // the antisymmetric mode is invisible and no dead-beat observer exists.
  WeightedDigraph g(5, {{4, 1, 1}, {5, 1, 1}, {1, 2, 1}, {2, 3, 1},
                        {3, 4, 1}, {3, 5, 1}, {4, 5, 1}, {5, 4, 1}});
  ConsensusSystem sys = build_system(g, 0.25);
  CHECK_THROWS_AS(design_deadbeat(sys, 3), NotObservable);
}

TEST_CASE("identify_partial round trip over every candidate arc") {
  // Fixture whose partial-identifiability pre-check passes outright: each
  // injected candidate fault must be identified as itself.
  WeightedDigraph g(6, {{6, 5, 1}, {5, 3, 1}, {3, 1, 1}, {1, 2, 1}, {2, 4, 1},
                        {4, 6, 1}, {1, 5, 1}, {1, 6, 1}, {2, 1, 1}, {2, 5, 1},
                        {2, 6, 1}, {3, 5, 1}});
  ConsensusSystem sys = build_system(g, 0.175);
  PartialIdentifiabilityReport rep = check_identifiability_partial(sys, 3);
  REQUIRE(rep.identifiable);
  REQUIRE(rep.candidates.size() >= 2);
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  std::mt19937 rng(62);
  for (const Arc& arc : rep.candidates) {
    std::vector<FaultInterval> faults = {{8, std::nullopt, arc.tail, arc.head}};
    Trajectory traj = simulate(sys, test::random_state(rng, 6),
                               to_schedule(g, faults), 9 + 4 * 6 + 6);
    ObserverRun run = run_observer(obs, outputs(traj, 3), 1e-9);
    std::vector<int> dets = all_detections(run, obs);
    REQUIRE(!dets.empty());
    PartialIdentification id =
        identify_partial(obs, sys, run, dets.front(), 1e-9);
    REQUIRE(id.kind == PartialIdentification::Kind::Identified);
    CHECK(id.edge.tail == arc.tail);
    CHECK(id.edge.head == arc.head);
  }
}

TEST_CASE("dead-beat contract on random observable fixtures") {
  std::mt19937 rng(63);
  std::uniform_int_distribution<int> size(4, 9);
  int done = 0;
  while (done < 20) {
    int n = size(rng);
    WeightedDigraph g = test::random_strong_digraph(rng, n);
    ConsensusSystem sys = build_system(g, test::safe_kappa(g));
    std::uniform_int_distribution<int> pp(1, n);
    int p = pp(rng);
    DeadBeatObserver obs;
    try {
      obs = design_deadbeat(sys, p);
    } catch (const NotObservable&) {
      continue;
    } catch (const IllConditionedTransform&) {
      continue;
    }
    CHECK(obs.tau0 >= (n + p - 1) / p);
    CHECK(obs.tau0 <= n - p + 1);
    Eigen::MatrixXd closed = obs.A + obs.G * output_matrix(p, n);
    Eigen::MatrixXd pw = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < obs.tau0; ++k) pw = pw * closed;
    // Large single-output gains amplify roundoff; scale like the power.
    double relscale =
        std::pow(std::max(1.0, closed.cwiseAbs().maxCoeff()), obs.tau0);
    CHECK(pw.cwiseAbs().maxCoeff() < 1e-9 * relscale);

    Eigen::VectorXd x0 = test::random_state(rng, n);
    Trajectory traj = simulate(sys, x0, {}, obs.tau0 + 10);
    ObserverRun run = run_observer(obs, outputs(traj, p), 1e-9);
    for (int t = obs.tau0; t < static_cast<int>(traj.states.size()); ++t)
      CHECK((run.xhat_states[static_cast<size_t>(t)] -
             traj.states[static_cast<size_t>(t)])
                .cwiseAbs()
                .maxCoeff() < 1e-11 * std::max(1.0, obs.condition_number) *
                                  std::max(1.0, x0.norm()));
    ++done;
  }
}

TEST_CASE("post-fault detection within 4N for discernible-from-p faults") {
  ConsensusSystem sys = test::paper_system();
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  std::mt19937 rng(64);
  for (int trial = 0; trial < 5; ++trial) {
    int tau = 5 + trial;
    std::vector<FaultInterval> faults = {{tau + 1, std::nullopt, 5, 7}};
    Trajectory traj = simulate(sys, test::random_state(rng, 7),
                               to_schedule(sys.graph(), faults), tau + 4 * 7);
    ObserverRun run = run_observer(obs, outputs(traj, 3), 1e-9);
    std::vector<int> dets = all_detections(run, obs);
    REQUIRE(!dets.empty());
    CHECK(dets.front() > tau);
    CHECK(dets.front() <= tau + 4 * 7);
  }
}

TEST_CASE("comparison-system PBH rank for a passing candidate pair") {
  // 6-node fixture whose partial-identifiability check passes outright; the
  // stacked 4N comparison system of two candidate composites is observable
  // except for the two block-ones directions at lambda = 1.
  WeightedDigraph g(6, {{6, 5, 1}, {5, 3, 1}, {3, 1, 1}, {1, 2, 1}, {2, 4, 1},
                        {4, 6, 1}, {1, 5, 1}, {1, 6, 1}, {2, 1, 1}, {2, 5, 1},
                        {2, 6, 1}, {3, 5, 1}});
  ConsensusSystem sys = build_system(g, 0.175);
  REQUIRE(check_identifiability_partial(sys, 3).identifiable);
  DeadBeatObserver obs = design_deadbeat(sys, 3);
  Eigen::MatrixXd M1 = composite_matrix(obs, sys, 1, 5);
  Eigen::MatrixXd M2 = composite_matrix(obs, sys, 2, 6);
  const int n = 6, p = 3, N4 = 4 * n;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N4, N4);
  D.topLeftCorner(2 * n, 2 * n) = M1;
  D.bottomRightCorner(2 * n, 2 * n) = M2;
  Eigen::MatrixXd G2 = Eigen::MatrixXd::Zero(p, N4);
  G2.block(0, 0, p, p) = Eigen::MatrixXd::Identity(p, p);
  G2.block(0, n, p, p) = -Eigen::MatrixXd::Identity(p, p);
  G2.block(0, 2 * n, p, p) = -Eigen::MatrixXd::Identity(p, p);
  G2.block(0, 3 * n, p, p) = Eigen::MatrixXd::Identity(p, p);

  auto pbh_rank = [&](std::complex<double> lam) {
    Eigen::MatrixXcd S(N4 + p, N4);
    S.topRows(N4) = lam * Eigen::MatrixXcd::Identity(N4, N4) -
                    D.cast<std::complex<double>>();
    S.bottomRows(p) = G2.cast<std::complex<double>>();
    return numerical_rank(S);
  };
  CHECK(pbh_rank(1.0) == N4 - 2);
  for (const EigenPair& e : eigen_pairs(D)) {
    // Skip the unit pair and the smeared defective zeros of the two
    // nilpotent observer blocks.
    if (std::abs(e.value - 1.0) < 1e-7 || std::abs(e.value) < 1e-3) continue;
    CHECK(pbh_rank(e.value) == N4);
  }
}
