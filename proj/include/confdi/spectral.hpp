#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "confdi/errors.hpp"

namespace confdi {

// Relative eigenvalue clustering tolerance.
inline constexpr double kTolEig = 1e-8;
// Relative singular-value cutoff for rank decisions.
inline constexpr double kTolRank = 1e-10;
// Base tolerance for the nilpotency test.
inline constexpr double kTolNil = 1e-9;

// One eigenvalue cluster of a real matrix.
struct EigenPair {
  std::complex<double> value;
  Eigen::VectorXcd vector;  // unit 2-norm representative eigenvector
  int geometric_multiplicity = 0;
  int algebraic_multiplicity = 0;
};

// Real block-diagonal form of a matrix with simple spectrum and a simple
// dominant eigenvalue 1: J has a leading 1x1 block [1], then 1x1 blocks for
// real eigenvalues and 2x2 blocks [[a,b],[-b,a]] for complex pairs a+-bi.
// The first column of T is the all-ones vector.
struct RealBlockForm {
  Eigen::MatrixXd T;
  Eigen::MatrixXd J;
};

// All eigenvalues of A, clustered at relative tolerance kTolEig. The
// geometric multiplicity of a cluster is the numerical kernel dimension of
// (A - lambda I). Complex pairs are reported once per conjugate member.
std::vector<EigenPair> eigen_pairs(const Eigen::MatrixXd& A);

// Orthonormal basis of the numerical kernel of (A - lambda I).
Eigen::MatrixXcd eigenspace_basis(const Eigen::MatrixXd& A,
                                  std::complex<double> lambda);

// Left eigenvector w of A for eigenvalue 1, normalized to w^T 1 = 1.
// Requires A*1 = 1 and irreducibility; throws NotIrreducible when the unit
// eigenvalue is numerically non-simple or w is not strictly positive.
Eigen::VectorXd left_perron_vector(const Eigen::MatrixXd& A);

// Throws RepeatedEigenvalue when any non-unit eigenvalue cluster has
// multiplicity > 1, AssumptionViolated when 1 is not a simple dominant
// eigenvalue with eigenvector in span{1}.
RealBlockForm real_block_form(const Eigen::MatrixXd& A);

int numerical_rank(const Eigen::MatrixXd& M);
int numerical_rank(const Eigen::MatrixXcd& M);

// Smallest k <= N with ||M^k||_max below the nilpotency threshold, or
// nullopt if M is not nilpotent.
std::optional<int> nilpotency_index(const Eigen::MatrixXd& M);

}  // namespace confdi
