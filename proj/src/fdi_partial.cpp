#include "confdi/fdi_partial.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "confdi/discernibility.hpp"
#include "confdi/spectral.hpp"

namespace confdi {

namespace {

Eigen::MatrixXd output_matrix(int p, int n) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, n);
  C.leftCols(p).setIdentity();
  return C;
}

double condition_number(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

}  // namespace

DeadBeatObserver design_deadbeat(const ConsensusSystem& sys, int p) {
  const int n = sys.size();
  const Eigen::MatrixXd& A = sys.state_matrix();
  if (p < 1 || p > n) throw InvalidInput("observed count out of range");
  {
    PbhResult pbh = pbh_observable(A, p);
    if (!pbh.observable)
      throw NotObservable("pair (A,[I_p 0]) is unobservable at " +
                          std::to_string(pbh.unobservable_eigenvalues.size()) +
                          " eigenvalue(s)");
  }
  const Eigen::MatrixXd C = output_matrix(p, n);

  // Greedy cyclic selection of observability indices: scan c_i A^j in output
  // order for increasing j, keeping each row that increases the rank. Once a
  // row of a chain becomes dependent, the whole remaining chain is.
  std::vector<int> mu(static_cast<size_t>(p), 0);
  std::vector<char> active(static_cast<size_t>(p), 1);
  std::vector<Eigen::RowVectorXd> chain(static_cast<size_t>(p));
  for (int i = 0; i < p; ++i) chain[static_cast<size_t>(i)] = C.row(i);
  Eigen::MatrixXd basis(n, n);  // orthonormal rows of the selected span
  int selected = 0;
  for (int j = 0; j < n && selected < n; ++j) {
    for (int i = 0; i < p && selected < n; ++i) {
      if (!active[static_cast<size_t>(i)]) continue;
      Eigen::RowVectorXd cand = chain[static_cast<size_t>(i)];
      Eigen::RowVectorXd resid = cand;
      for (int k = 0; k < selected; ++k)
        resid -= resid.dot(basis.row(k)) * basis.row(k);
      // Second orthogonalization pass for numerical safety.
      for (int k = 0; k < selected; ++k)
        resid -= resid.dot(basis.row(k)) * basis.row(k);
      if (resid.norm() > 1e-9 * std::max(1.0, cand.norm())) {
        basis.row(selected++) = resid.normalized();
        mu[static_cast<size_t>(i)] += 1;
        chain[static_cast<size_t>(i)] = cand * A;
      } else {
        active[static_cast<size_t>(i)] = 0;
      }
    }
  }
  if (selected != n)
    throw NotObservable("observability-index selection found rank " +
                        std::to_string(selected) + " < " + std::to_string(n));

  // Stack the selected rows grouped per output.
  Eigen::MatrixXd O(n, n);
  std::vector<int> sigma;  // last row index of each output block
  {
    int row = 0;
    for (int i = 0; i < p; ++i) {
      Eigen::RowVectorXd r = C.row(i);
      for (int j = 0; j < mu[static_cast<size_t>(i)]; ++j) {
        O.row(row++) = r;
        r = r * A;
      }
      if (mu[static_cast<size_t>(i)] > 0) sigma.push_back(row - 1);
    }
  }
  const Eigen::MatrixXd Oinv = O.inverse();

  // Dual chain basis: columns A^j t_i with t_i dual to the last row of each
  // block. In these coordinates A becomes shift blocks plus dense columns at
  // the sigma positions, and C is supported on those columns only.
  Eigen::MatrixXd T(n, n);
  {
    int col = 0;
    int block = 0;
    for (int i = 0; i < p; ++i) {
      if (mu[static_cast<size_t>(i)] == 0) continue;
      Eigen::VectorXd t = Oinv.col(sigma[static_cast<size_t>(block++)]);
      for (int j = 0; j < mu[static_cast<size_t>(i)]; ++j) {
        T.col(col++) = t;
        t = A * t;
      }
    }
  }
  const double cond = std::max(condition_number(O), condition_number(T));
  if (cond > kMaxCondition)
    throw IllConditionedTransform("canonical-form transformation condition " +
                                  std::to_string(cond));

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(T);
  const Eigen::MatrixXd Ao = lu.solve(A * T);
  const Eigen::MatrixXd Co = C * T;

  const int nblocks = static_cast<int>(sigma.size());
  Eigen::MatrixXd dense(n, nblocks);
  Eigen::MatrixXd Chat(p, nblocks);
  for (int b = 0; b < nblocks; ++b) {
    dense.col(b) = Ao.col(sigma[static_cast<size_t>(b)]);
    Chat.col(b) = Co.col(sigma[static_cast<size_t>(b)]);
  }
  // Cancel the dense columns: L_o Chat = -dense.
  const Eigen::MatrixXd Lo =
      -dense * Chat.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd G = T * Lo;

  // In canonical coordinates the closed loop is a pure block shift, so the
  // nilpotency index equals the largest observability index. Verify the
  // designed loop actually vanishes at that power.
  const int tau0 = *std::max_element(mu.begin(), mu.end());
  {
    const Eigen::MatrixXd closed = A + G * C;
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < tau0; ++k) P = P * closed;
    const double scale =
        std::pow(std::max(1.0, closed.cwiseAbs().maxCoeff()), tau0);
    if (P.cwiseAbs().maxCoeff() > kTolNil * scale)
      throw ConvergenceFailure("designed closed loop is not nilpotent");
  }
  const int lower = (n + p - 1) / p;
  if (tau0 < lower || tau0 > n - p + 1)
    throw ConvergenceFailure("nilpotency index " + std::to_string(tau0) +
                             " outside [" + std::to_string(lower) + "," +
                             std::to_string(n - p + 1) + "]");
  DeadBeatObserver obs;
  obs.p = p;
  obs.G = G;
  obs.tau0 = tau0;
  obs.A = A;
  obs.condition_number = cond;
  return obs;
}

ObserverRun run_observer(const DeadBeatObserver& obs,
                         const std::vector<Eigen::VectorXd>& y_stream,
                         double eps) {
  const int n = static_cast<int>(obs.A.rows());
  const Eigen::MatrixXd C = output_matrix(obs.p, n);
  ObserverRun run;
  run.xhat_states.reserve(y_stream.size());
  run.residuals.reserve(y_stream.size());
  run.detection_signal.reserve(y_stream.size());
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(n);
  for (size_t t = 0; t < y_stream.size(); ++t) {
    const Eigen::VectorXd& y = y_stream[t];
    if (y.size() != obs.p) throw InvalidInput("output sample has wrong size");
    run.xhat_states.push_back(xhat);
    Eigen::VectorXd r = C * xhat - y;
    run.residuals.push_back(r);
    run.detection_signal.push_back(r.cwiseAbs().maxCoeff() > eps);
    xhat = obs.A * xhat - obs.G * (y - C * xhat);
  }
  return run;
}

std::optional<int> first_detection(const ObserverRun& run,
                                   const DeadBeatObserver& obs, int from) {
  const int T = static_cast<int>(run.detection_signal.size());
  for (int t = std::max(obs.tau0, from + 1); t < T; ++t) {
    bool prev = t > obs.tau0 && run.detection_signal[static_cast<size_t>(t - 1)];
    if (run.detection_signal[static_cast<size_t>(t)] && !prev) return t;
  }
  return std::nullopt;
}

PartialIdentifiabilityReport check_identifiability_partial(
    const ConsensusSystem& sys, int p) {
  PartialIdentifiabilityReport report;
  auto arc_name = [](const Arc& a) {
    return "(" + std::to_string(a.tail) + "," + std::to_string(a.head) + ")";
  };
  std::vector<Eigen::MatrixXd> faulty;
  for (const Arc& arc : sys.graph().arcs()) {
    if (!is_strongly_connected(sys.graph().without_arc(arc.tail, arc.head)))
      continue;  // excluded from candidacy: a disconnecting fault is loud
    report.candidates.push_back(arc);
    faulty.push_back(disconnect_edge(sys, arc.tail, arc.head));
    try {
      DiscernibilityVerdict v =
          discernible_partial(sys, arc.tail, arc.head, p);
      if (!v.discernible)
        report.failures.push_back("arc " + arc_name(arc) +
                                  " is not discernible from the first " +
                                  std::to_string(p) + " states");
    } catch (const AssumptionViolated& e) {
      report.failures.push_back("arc " + arc_name(arc) + ": " + e.what());
    }
  }
  std::vector<std::vector<EigenPair>> spectra;
  spectra.reserve(faulty.size());
  for (const Eigen::MatrixXd& f : faulty) spectra.push_back(eigen_pairs(f));
  for (size_t a = 0; a < faulty.size(); ++a) {
    for (size_t b = a + 1; b < faulty.size(); ++b) {
      for (const EigenPair& pa : spectra[a]) {
        if (std::abs(pa.value - 1.0) < kTolShared) continue;
        bool shared = std::any_of(
            spectra[b].begin(), spectra[b].end(), [&](const EigenPair& pb) {
              return std::abs(pa.value - pb.value) < kTolShared;
            });
        if (shared) {
          report.failures.push_back(
              "arcs " + arc_name(report.candidates[a]) + " and " +
              arc_name(report.candidates[b]) + " share a non-unit eigenvalue");
          break;
        }
      }
    }
  }
  report.identifiable = report.failures.empty();
  return report;
}

Eigen::MatrixXd composite_matrix(const DeadBeatObserver& obs,
                                 const ConsensusSystem& sys, int tail,
                                 int head) {
  const int n = sys.size();
  const Eigen::MatrixXd C = output_matrix(obs.p, n);
  const Eigen::MatrixXd Abar = disconnect_edge(sys, tail, head);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = obs.A + obs.G * C;
  M.topRightCorner(n, n) = -obs.G * C;
  M.bottomRightCorner(n, n) = Abar;
  return M;
}

PartialIdentification identify_partial(const DeadBeatObserver& obs,
                                       const ConsensusSystem& sys,
                                       const ObserverRun& run,
                                       int detection_time, double eps) {
  const int n = sys.size();
  const int p = obs.p;
  const int t0 = detection_time - 1;
  const int samples = 4 * n + 1;
  if (t0 < 0 || t0 + samples > static_cast<int>(run.residuals.size()))
    throw WindowTooShort("need " + std::to_string(samples) +
                         " residual samples from t=" + std::to_string(t0));

  Eigen::VectorXd window(samples * p);
  double peak = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd& r = run.residuals[static_cast<size_t>(t0 + k)];
    window.segment(k * p, p) = r;
    peak = std::max(peak, r.cwiseAbs().maxCoeff());
  }
  PartialIdentification result;
  if (peak <= eps) {
    result.kind = PartialIdentification::Kind::NoFault;
    return result;
  }

  Eigen::MatrixXd Gamma = Eigen::MatrixXd::Zero(p, 2 * n);
  Gamma.leftCols(p).setIdentity();
  Gamma.block(0, n, p, p) = -Eigen::MatrixXd::Identity(p, p);

  std::vector<Arc> matches;
  for (const Arc& arc : sys.graph().arcs()) {
    if (!is_strongly_connected(sys.graph().without_arc(arc.tail, arc.head)))
      continue;
    try {
      if (!discernible_partial(sys, arc.tail, arc.head, p).discernible)
        continue;
    } catch (const AssumptionViolated&) {
      continue;
    }
    const Eigen::MatrixXd composite =
        composite_matrix(obs, sys, arc.tail, arc.head);
    Eigen::MatrixXd Phi(samples * p, 2 * n);
    Eigen::MatrixXd block = Gamma;
    for (int k = 0; k < samples; ++k) {
      Phi.middleRows(k * p, p) = block;
      block = block * composite;
    }
    Eigen::VectorXd z = Phi.colPivHouseholderQr().solve(window);
    double misfit = (Phi * z - window).norm() / window.norm();
    result.tested.push_back(arc);
    result.misfits.push_back(misfit);
    if (misfit < kTolFit) matches.push_back(arc);
  }

  if (matches.size() == 1) {
    result.kind = PartialIdentification::Kind::Identified;
    result.edge = matches.front();
  } else {
    result.kind = PartialIdentification::Kind::Ambiguous;
    result.candidates = matches;
  }
  return result;
}

}  // namespace confdi
