#include "confdi/discernibility.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "confdi/spectral.hpp"

namespace confdi {

namespace {

bool near_unit(std::complex<double> lambda) {
  return std::abs(lambda - 1.0) < kTolShared;
}

// Shared eigenvalues of A and Abar other than 1.
std::vector<std::complex<double>> shared_values(
    const std::vector<EigenPair>& ea, const std::vector<EigenPair>& eb) {
  std::vector<std::complex<double>> shared;
  for (const EigenPair& a : ea) {
    if (near_unit(a.value)) continue;
    for (const EigenPair& b : eb) {
      if (std::abs(a.value - b.value) < kTolShared) {
        shared.push_back((a.value + b.value) / 2.0);
        break;
      }
    }
  }
  return shared;
}

// Lemma-style witness for an eigenspace of dimension >= 2: a combination of
// two basis vectors whose tail and head components coincide.
Eigen::VectorXcd combine_for_coincidence(const Eigen::MatrixXcd& basis,
                                         int tail0, int head0) {
  Eigen::Matrix2cd M;
  M << basis(tail0, 0), basis(tail0, 1), basis(head0, 0), basis(head0, 1);
  Eigen::Vector2cd a;
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(
      M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) > 1e-12 * std::max(1.0, svd.singularValues()(0))) {
    a = M.inverse() * Eigen::Vector2cd(1.0, 1.0);
  } else {
    a = svd.matrixV().col(1);  // kernel direction: both components vanish
  }
  return (basis.col(0) * a(0) + basis.col(1) * a(1)).normalized();
}

}  // namespace

DiscernibilityVerdict discernible_full(const ConsensusSystem& sys, int tail,
                                       int head) {
  if (!is_strongly_connected(sys.graph().without_arc(tail, head)))
    throw FaultDisconnectsGraph("removing arc (" + std::to_string(tail) + "," +
                                std::to_string(head) +
                                ") disconnects the graph");
  const Eigen::MatrixXd& A = sys.state_matrix();
  const Eigen::MatrixXd Abar = disconnect_edge(sys, tail, head);
  const int t0 = tail - 1;
  const int h0 = head - 1;

  DiscernibilityVerdict verdict;
  verdict.tail = tail;
  verdict.head = head;
  verdict.mode = ObservationMode::FullState;
  verdict.margin = 1.0;

  for (const EigenPair& p : eigen_pairs(A)) {
    if (near_unit(p.value)) continue;
    if (p.geometric_multiplicity > 1) {
      Eigen::MatrixXcd basis = eigenspace_basis(A, p.value);
      verdict.witnesses.push_back(
          {p.value, combine_for_coincidence(basis, t0, h0), {}});
      verdict.margin = 0.0;
      continue;
    }
    Eigen::VectorXcd v = p.vector.normalized();
    double gap = std::abs(v(t0) - v(h0));
    verdict.margin = std::min(verdict.margin, gap);
    if (gap < kTolWitness) verdict.witnesses.push_back({p.value, v, {}});
  }
  verdict.shared_spectrum = shared_values(eigen_pairs(A), eigen_pairs(Abar));
  verdict.discernible = verdict.witnesses.empty();
  return verdict;
}

PbhResult pbh_observable(const Eigen::MatrixXd& M, int p) {
  const int n = static_cast<int>(M.rows());
  if (p < 1 || p > n) throw InvalidInput("observed count out of range");
  PbhResult result;
  result.observable = true;
  for (const EigenPair& pair : eigen_pairs(M)) {
    Eigen::MatrixXcd stacked = Eigen::MatrixXcd::Zero(n + p, n);
    stacked.topRows(n) =
        pair.value * Eigen::MatrixXcd::Identity(n, n) -
        M.cast<std::complex<double>>();
    stacked.block(n, 0, p, p) = Eigen::MatrixXcd::Identity(p, p);
    if (numerical_rank(stacked) < n) {
      result.observable = false;
      result.unobservable_eigenvalues.push_back(pair.value);
    }
  }
  return result;
}

DiscernibilityVerdict discernible_partial(const ConsensusSystem& sys, int tail,
                                          int head, int p) {
  if (!is_strongly_connected(sys.graph().without_arc(tail, head)))
    throw FaultDisconnectsGraph("removing arc (" + std::to_string(tail) + "," +
                                std::to_string(head) +
                                ") disconnects the graph");
  const Eigen::MatrixXd& A = sys.state_matrix();
  const Eigen::MatrixXd Abar = disconnect_edge(sys, tail, head);
  const int n = sys.size();
  if (!pbh_observable(A, p).observable)
    throw AssumptionViolated("original system is not observable from the "
                             "first " + std::to_string(p) + " states");
  if (!pbh_observable(Abar, p).observable)
    throw AssumptionViolated("faulty system is not observable from the "
                             "first " + std::to_string(p) + " states");

  DiscernibilityVerdict verdict;
  verdict.tail = tail;
  verdict.head = head;
  verdict.mode = ObservationMode::Partial;
  verdict.p = p;
  verdict.margin = 1.0;
  verdict.shared_spectrum = shared_values(eigen_pairs(A), eigen_pairs(Abar));

  for (std::complex<double> lambda : verdict.shared_spectrum) {
    Eigen::MatrixXcd stacked = Eigen::MatrixXcd::Zero(2 * n + p, 2 * n);
    stacked.topLeftCorner(n, n) =
        lambda * Eigen::MatrixXcd::Identity(n, n) -
        A.cast<std::complex<double>>();
    stacked.block(n, n, n, n) =
        lambda * Eigen::MatrixXcd::Identity(n, n) -
        Abar.cast<std::complex<double>>();
    stacked.block(2 * n, 0, p, p) = Eigen::MatrixXcd::Identity(p, p);
    stacked.block(2 * n, n, p, p) = -Eigen::MatrixXcd::Identity(p, p);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double rel_smallest = sv(2 * n - 1) / sv(0);
    verdict.margin = std::min(verdict.margin, rel_smallest);
    if (numerical_rank(stacked) < 2 * n) {
      Eigen::VectorXcd kernel = svd.matrixV().col(2 * n - 1);
      verdict.witnesses.push_back(
          {lambda, kernel.head(n), kernel.tail(n)});
    }
  }
  verdict.discernible = verdict.witnesses.empty();
  return verdict;
}

std::vector<SharedEigenpair> shared_eigenstructure(const Eigen::MatrixXd& M1,
                                                   const Eigen::MatrixXd& M2) {
  const int n = static_cast<int>(M1.rows());
  const double scale =
      std::max({1.0, M1.cwiseAbs().maxCoeff(), M2.cwiseAbs().maxCoeff()});
  std::vector<SharedEigenpair> result;
  std::vector<EigenPair> e2 = eigen_pairs(M2);
  for (const EigenPair& p1 : eigen_pairs(M1)) {
    auto match = std::find_if(e2.begin(), e2.end(), [&](const EigenPair& p2) {
      return std::abs(p1.value - p2.value) < kTolShared;
    });
    if (match == e2.end()) continue;
    std::complex<double> lambda = (p1.value + match->value) / 2.0;

    // Common eigenvectors: kernel of [M1 - lambda I; M2 - lambda I].
    Eigen::MatrixXcd stacked(2 * n, n);
    stacked.topRows(n) = M1.cast<std::complex<double>>() -
                         lambda * Eigen::MatrixXcd::Identity(n, n);
    stacked.bottomRows(n) = M2.cast<std::complex<double>>() -
                            lambda * Eigen::MatrixXcd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked, Eigen::ComputeFullV);
    const double tol = kTolEig * scale;
    for (int i = 0; i < n; ++i) {
      if (svd.singularValues()(i) >= tol) continue;
      Eigen::VectorXcd v = svd.matrixV().col(i);
      bool trivial = near_unit(lambda) &&
                     (v - Eigen::VectorXcd::Constant(n, v.mean())).norm() <
                         1e-6 * v.norm();
      result.push_back({lambda, v, trivial});
    }
  }
  return result;
}

std::vector<AuditEntry> audit_graph(const ConsensusSystem& sys,
                                    ObservationMode mode, int p) {
  std::vector<AuditEntry> entries;
  for (const Arc& arc : sys.graph().arcs()) {
    AuditEntry entry;
    entry.arc = arc;
    try {
      entry.verdict = mode == ObservationMode::FullState
                          ? discernible_full(sys, arc.tail, arc.head)
                          : discernible_partial(sys, arc.tail, arc.head, p);
      entry.status = "ok";
    } catch (const FaultDisconnectsGraph&) {
      entry.status = "fault-disconnects-graph";
    } catch (const AssumptionViolated& e) {
      entry.status = e.what();
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace confdi
