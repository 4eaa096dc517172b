#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "confdi/discernibility.hpp"
#include "confdi/spectral.hpp"
#include "test_support.hpp"

using namespace confdi;

namespace {

// Alternative route: PBH on (A, [e_r - e_h]^T); discernible iff the only
// rank drop is at the unit eigenvalue.
bool discernible_route_iii(const Eigen::MatrixXd& A, int tail, int head) {
  const int n = static_cast<int>(A.rows());
  for (const EigenPair& p : eigen_pairs(A)) {
    if (std::abs(p.value - 1.0) < kTolShared) continue;
    Eigen::MatrixXcd stacked = Eigen::MatrixXcd::Zero(n + 1, n);
    stacked.topRows(n) = p.value * Eigen::MatrixXcd::Identity(n, n) -
                         A.cast<std::complex<double>>();
    stacked(n, tail - 1) = 1.0;
    stacked(n, head - 1) = -1.0;
    if (numerical_rank(stacked) < n) return false;
  }
  return true;
}

// Alternative route: no common eigenpair other than (1, span{1}).
bool discernible_route_v(const Eigen::MatrixXd& A, const Eigen::MatrixXd& abar) {
  for (const SharedEigenpair& s : shared_eigenstructure(A, abar))
    if (!s.trivial) return false;
  return true;
}

}  // namespace

TEST_CASE("7-node example full-state verdicts") {
  ConsensusSystem sys = test::paper_system();

  DiscernibilityVerdict bad = discernible_full(sys, 6, 5);
  CHECK_FALSE(bad.discernible);
  REQUIRE_FALSE(bad.witnesses.empty());
  bool half_witness = false;
  Eigen::MatrixXd abar = disconnect_edge(sys, 6, 5);
  for (const DiscernibilityWitness& w : bad.witnesses) {
    if (std::abs(w.lambda - 0.5) < 1e-7) half_witness = true;
    // Witness is a common eigenpair of A and the faulty matrix.
    CHECK((sys.state_matrix().cast<std::complex<double>>() * w.v -
           w.lambda * w.v)
              .norm() < 1e-8);
    CHECK((abar.cast<std::complex<double>>() * w.v - w.lambda * w.v).norm() <
          1e-8);
  }
  CHECK(half_witness);
  bool shared_half = false;
  for (std::complex<double> s : bad.shared_spectrum)
    if (std::abs(s - 0.5) < 1e-7) shared_half = true;
  CHECK(shared_half);

  DiscernibilityVerdict good = discernible_full(sys, 5, 7);
  CHECK(good.discernible);
  CHECK(good.witnesses.empty());
  CHECK(good.shared_spectrum.empty());
  CHECK(good.margin > 1e-7);
}

TEST_CASE("disconnecting fault raises") {
  WeightedDigraph cyc(3, {{1, 2, 1}, {2, 3, 1}, {3, 1, 1}});
  ConsensusSystem sys = build_system(cyc, 0.3);
  CHECK_THROWS_AS(discernible_full(sys, 1, 2), FaultDisconnectsGraph);
  CHECK_THROWS_AS(discernible_partial(sys, 1, 2, 1), FaultDisconnectsGraph);
}

TEST_CASE("equivalent discernibility characterizations agree") {
  std::mt19937 rng(41);
  std::uniform_int_distribution<int> size(4, 10);
  int checked = 0;
  while (checked < 30) {
    WeightedDigraph g = test::random_strong_digraph(rng, size(rng));
    ConsensusSystem sys = build_system(g, test::safe_kappa(g));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(g.arcs().size()) - 1);
    Arc arc = g.arcs()[static_cast<size_t>(pick(rng))];
    if (!is_strongly_connected(g.without_arc(arc.tail, arc.head))) continue;
    bool iv = discernible_full(sys, arc.tail, arc.head).discernible;
    bool iii = discernible_route_iii(sys.state_matrix(), arc.tail, arc.head);
    bool v = discernible_route_v(sys.state_matrix(),
                                 disconnect_edge(sys, arc.tail, arc.head));
    CHECK(iv == iii);
    CHECK(iv == v);
    ++checked;
  }
}

TEST_CASE("pbh_observable") {
  CHECK(pbh_observable(test::paper_matrix(), 3).observable);
  PbhResult id2 = pbh_observable(Eigen::MatrixXd::Identity(2, 2), 1);
  CHECK_FALSE(id2.observable);
  Eigen::MatrixXd d(2, 2);
  d << 1, 0, 0, 0.5;
  PbhResult r = pbh_observable(d, 1);
  CHECK_FALSE(r.observable);
  REQUIRE(r.unobservable_eigenvalues.size() == 1);
  CHECK(std::abs(r.unobservable_eigenvalues[0] - 0.5) < 1e-9);
  CHECK_THROWS_AS(pbh_observable(d, 0), InvalidInput);
}

TEST_CASE("7-node example partial verdicts at p=3") {
  ConsensusSystem sys = test::paper_system();
  DiscernibilityVerdict bad = discernible_partial(sys, 6, 5, 3);
  CHECK_FALSE(bad.discernible);
  REQUIRE_FALSE(bad.witnesses.empty());
  // The kernel witness has equal observed components across both halves.
  const DiscernibilityWitness& w = bad.witnesses.front();
  CHECK(std::abs(w.lambda - 0.5) < 1e-6);
  CHECK((w.v.head(3) - w.v_faulty.head(3)).norm() < 1e-7);

  DiscernibilityVerdict good = discernible_partial(sys, 5, 7, 3);
  CHECK(good.discernible);
}

TEST_CASE("partial with p=N matches the full-state verdict") {
  std::mt19937 rng(42);
  int checked = 0;
  while (checked < 15) {
    WeightedDigraph g = test::random_strong_digraph(rng, 4 + checked % 4);
    ConsensusSystem sys = build_system(g, test::safe_kappa(g));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(g.arcs().size()) - 1);
    Arc arc = g.arcs()[static_cast<size_t>(pick(rng))];
    if (!is_strongly_connected(g.without_arc(arc.tail, arc.head))) continue;
    bool full = discernible_full(sys, arc.tail, arc.head).discernible;
    bool part = discernible_partial(sys, arc.tail, arc.head, g.size()).discernible;
    CHECK(full == part);
    ++checked;
  }
}

TEST_CASE("partial discernibility implies full discernibility") {
  ConsensusSystem sys = test::paper_system();
  for (const Arc& arc : sys.graph().arcs()) {
    if (!is_strongly_connected(sys.graph().without_arc(arc.tail, arc.head)))
      continue;
    bool part;
    try {
      part = discernible_partial(sys, arc.tail, arc.head, 3).discernible;
    } catch (const AssumptionViolated&) {
      continue;
    }
    if (part) CHECK(discernible_full(sys, arc.tail, arc.head).discernible);
  }
}

TEST_CASE("shared_eigenstructure") {
  Eigen::MatrixXd A = test::paper_matrix();
  std::vector<SharedEigenpair> self = shared_eigenstructure(A, A);
  CHECK(self.size() >= 7u - 1u);  // conjugate pairs may merge clusters

  Eigen::MatrixXd a56 = A;
  a56(4, 4) += 0.25;
  a56(4, 5) -= 0.25;
  std::vector<SharedEigenpair> s = shared_eigenstructure(A, a56);
  bool nontrivial_half = false;
  for (const SharedEigenpair& e : s)
    if (!e.trivial && std::abs(e.lambda - 0.5) < 1e-7) nontrivial_half = true;
  CHECK(nontrivial_half);

  Eigen::MatrixXd a75 = A;
  a75(6, 6) += 0.25;
  a75(6, 4) -= 0.25;
  for (const SharedEigenpair& e : shared_eigenstructure(A, a75))
    CHECK(e.trivial);
}

TEST_CASE("non-discernible witness freezes the trajectory difference") {
  ConsensusSystem sys = test::paper_system();
  DiscernibilityVerdict v = discernible_full(sys, 6, 5);
  REQUIRE_FALSE(v.witnesses.empty());
  Eigen::VectorXd x = v.witnesses.front().v.real();
  if (x.norm() < 1e-6) x = v.witnesses.front().v.imag();
  REQUIRE(x.norm() > 1e-6);
  Eigen::MatrixXd abar = disconnect_edge(sys, 6, 5);
  Eigen::VectorXd xh = x, xf = x;
  for (int t = 0; t < 14; ++t) {
    xh = sys.state_matrix() * xh;
    xf = abar * xf;
    CHECK((xh - xf).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("audit_graph") {
  ConsensusSystem sys = test::paper_system();
  std::vector<AuditEntry> entries = audit_graph(sys, ObservationMode::FullState);
  REQUIRE(entries.size() == sys.graph().arcs().size());
  for (const AuditEntry& e : entries) {
    if (e.arc.tail == 6 && e.arc.head == 5) {
      REQUIRE(e.verdict.has_value());
      CHECK_FALSE(e.verdict->discernible);
    }
    if (e.arc.tail == 5 && e.arc.head == 7) {
      REQUIRE(e.verdict.has_value());
      CHECK(e.verdict->discernible);
    }
    bool keeps = is_strongly_connected(
        sys.graph().without_arc(e.arc.tail, e.arc.head));
    CHECK(e.verdict.has_value() == keeps);
    if (!keeps) CHECK(e.status == "fault-disconnects-graph");
  }
}

TEST_CASE("same-cell arcs of an almost equitable partition are flagged") {
  // K4, all weights 1, partition {1,2},{3,4}.
  std::vector<Arc> arcs;
  for (int a = 1; a <= 4; ++a)
    for (int b = 1; b <= 4; ++b)
      if (a != b) arcs.push_back({a, b, 1.0});
  WeightedDigraph g(4, arcs);
  ConsensusSystem sys = build_system(g, 0.2);
  Partition pi{{{1, 2}, {3, 4}}};
  REQUIRE(is_almost_equitable(g, pi));
  std::vector<AuditEntry> entries = audit_graph(sys, ObservationMode::FullState);
  for (const Arc& same : cell_edge_pairs(pi, g)) {
    for (const AuditEntry& e : entries) {
      if (e.arc.tail == same.tail && e.arc.head == same.head) {
        REQUIRE(e.verdict.has_value());
        CHECK_FALSE(e.verdict->discernible);
      }
    }
  }
}
