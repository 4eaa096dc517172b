#include "confdi/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace confdi {

namespace {

double matrix_scale(const Eigen::MatrixXd& A) {
  return std::max(1.0, A.cwiseAbs().maxCoeff());
}

// Rotate a complex vector with (numerically) collinear real/imag parts onto
// the real axis.
Eigen::VectorXd realify(const Eigen::VectorXcd& v) {
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  std::complex<double> phase = std::conj(v(imax)) / std::abs(v(imax));
  return (v * phase).real();
}

struct Cluster {
  std::complex<double> value;
  std::vector<int> members;
};

std::vector<Cluster> cluster_values(const Eigen::VectorXcd& values,
                                    double tol) {
  std::vector<Cluster> clusters;
  for (int i = 0; i < values.size(); ++i) {
    bool placed = false;
    for (Cluster& c : clusters) {
      if (std::abs(values(i) - c.value) <= tol) {
        c.members.push_back(i);
        // Keep the representative at the cluster mean.
        std::complex<double> sum = 0.0;
        for (int m : c.members) sum += values(m);
        c.value = sum / static_cast<double>(c.members.size());
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({values(i), {i}});
  }
  return clusters;
}

}  // namespace

std::vector<EigenPair> eigen_pairs(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) throw InvalidInput("matrix has non-finite entries");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("eigendecomposition did not converge");
  const double tol = kTolEig * matrix_scale(A);
  std::vector<Cluster> clusters = cluster_values(solver.eigenvalues(), tol);
  std::vector<EigenPair> result;
  result.reserve(clusters.size());
  for (const Cluster& c : clusters) {
    EigenPair p;
    p.value = c.value;
    p.vector = solver.eigenvectors().col(c.members.front()).normalized();
    p.algebraic_multiplicity = static_cast<int>(c.members.size());
    p.geometric_multiplicity =
        static_cast<int>(eigenspace_basis(A, c.value).cols());
    result.push_back(std::move(p));
  }
  return result;
}

Eigen::MatrixXcd eigenspace_basis(const Eigen::MatrixXd& A,
                                  std::complex<double> lambda) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXcd M =
      lambda * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const double tol = kTolEig * matrix_scale(A);
  int kernel = 0;
  for (int i = 0; i < n; ++i)
    if (svd.singularValues()(i) < tol) ++kernel;
  return svd.matrixV().rightCols(kernel);
}

Eigen::VectorXd left_perron_vector(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  if ((A * ones - ones).cwiseAbs().maxCoeff() > 1e-9)
    throw InvalidInput("matrix does not satisfy A*1 = 1");
  std::vector<EigenPair> pairs = eigen_pairs(A.transpose());
  const EigenPair* unit = nullptr;
  for (const EigenPair& p : pairs)
    if (!unit || std::abs(p.value - 1.0) < std::abs(unit->value - 1.0))
      unit = &p;
  if (!unit || std::abs(unit->value - 1.0) > kTolEig * matrix_scale(A))
    throw ConvergenceFailure("unit eigenvalue not found");
  if (unit->algebraic_multiplicity != 1)
    throw NotIrreducible("unit eigenvalue is numerically non-simple");
  Eigen::VectorXd w = realify(unit->vector);
  double s = w.sum();
  if (s == 0.0) throw NotIrreducible("left eigenvector orthogonal to 1");
  w /= s;
  if ((w.array() <= 0.0).any())
    throw NotIrreducible("left eigenvector is not strictly positive");
  return w;
}

RealBlockForm real_block_form(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  const double tol = kTolEig * matrix_scale(A);
  std::vector<EigenPair> pairs = eigen_pairs(A);

  const EigenPair* unit = nullptr;
  for (const EigenPair& p : pairs)
    if (!unit || std::abs(p.value - 1.0) < std::abs(unit->value - 1.0))
      unit = &p;
  if (!unit || std::abs(unit->value - 1.0) > tol)
    throw AssumptionViolated("matrix has no unit eigenvalue");
  if (unit->algebraic_multiplicity != 1)
    throw AssumptionViolated("unit eigenvalue is not simple");
  {
    Eigen::VectorXd v1 = realify(unit->vector);
    double spread = (v1 / v1.mean() - Eigen::VectorXd::Ones(n)).norm();
    if (!(std::abs(v1.mean()) > 0.0) || spread > 1e-6)
      throw AssumptionViolated("unit eigenvector is not in span{1}");
  }

  std::vector<const EigenPair*> rest;
  for (const EigenPair& p : pairs) {
    if (&p == unit) continue;
    if (p.algebraic_multiplicity > 1)
      throw RepeatedEigenvalue("non-unit eigenvalue cluster of multiplicity " +
                               std::to_string(p.algebraic_multiplicity));
    if (std::abs(p.value) >= 1.0 - tol)
      throw AssumptionViolated("non-unit eigenvalue with modulus >= 1");
    if (p.value.imag() < -tol) continue;  // conjugate handled by b > 0 member
    rest.push_back(&p);
  }
  std::sort(rest.begin(), rest.end(),
            [](const EigenPair* a, const EigenPair* b) {
              if (a->value.real() != b->value.real())
                return a->value.real() > b->value.real();
              return a->value.imag() < b->value.imag();
            });

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  T.col(0) = Eigen::VectorXd::Ones(n);
  J(0, 0) = 1.0;
  int col = 1;
  for (const EigenPair* p : rest) {
    if (std::abs(p->value.imag()) <= tol) {
      T.col(col) = realify(p->vector).normalized();
      J(col, col) = p->value.real();
      col += 1;
    } else {
      const double a = p->value.real();
      const double b = p->value.imag();  // canonical member has b > 0
      T.col(col) = p->vector.real();
      T.col(col + 1) = p->vector.imag();
      J(col, col) = a;
      J(col, col + 1) = b;
      J(col + 1, col) = -b;
      J(col + 1, col + 1) = a;
      col += 2;
    }
  }
  if (col != n)
    throw ConvergenceFailure("real block form assembly mismatch");
  double err = (T * J - A * T).cwiseAbs().maxCoeff();
  if (err > 100.0 * tol)
    throw ConvergenceFailure("real block form residual too large");
  if (numerical_rank(T) != n)
    throw ConvergenceFailure("block-form transformation is singular");
  return {T, J};
}

int numerical_rank(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  if (svd.singularValues().size() == 0) return 0;
  const double smax = svd.singularValues()(0);
  if (smax == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > kTolRank * smax) ++rank;
  return rank;
}

int numerical_rank(const Eigen::MatrixXcd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  if (svd.singularValues().size() == 0) return 0;
  const double smax = svd.singularValues()(0);
  if (smax == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > kTolRank * smax) ++rank;
  return rank;
}

std::optional<int> nilpotency_index(const Eigen::MatrixXd& M) {
  if (!M.allFinite()) throw InvalidInput("matrix has non-finite entries");
  const int n = static_cast<int>(M.rows());
  const double scale = matrix_scale(M);
  Eigen::MatrixXd P = M;
  double bound = scale;
  for (int k = 1; k <= n; ++k) {
    if (P.cwiseAbs().maxCoeff() < kTolNil * bound) return k;
    P = P * M;
    bound *= scale;
  }
  return std::nullopt;
}

}  // namespace confdi
