#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "ddpred/rng.hpp"

namespace ddpred {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

/// Numerical-rank cutoff: max(rows, cols) * machine epsilon * sigma_max.
double rank_threshold(Index rows, Index cols, const Vector& singular_values);

Index numerical_rank(const Matrix& A);

struct PinvResult {
    Matrix pinv;
    Index rank;
};

/// Moore-Penrose pseudo-inverse by SVD with the rank_threshold cutoff.
PinvResult pinv_with_rank(const Matrix& A);
Matrix pinv(const Matrix& A);

double spectral_radius(const Matrix& A);

Matrix kronecker(const Matrix& A, const Matrix& B);

/// Solves A X A^T - X + Q = 0 by Kronecker vectorization. Exact at small
/// state dimensions (the intended n <= ~12 regime); O(n^6) beyond that.
Matrix solve_discrete_lyapunov(const Matrix& A, const Matrix& Q);

/// Symmetric square root of a positive semidefinite matrix; negative
/// eigenvalues from roundoff are clamped to zero.
Matrix psd_sqrt(const Matrix& S);

/// Cholesky factorization of a symmetric matrix with a single retry after
/// adding jitter_scale * trace / dim to the diagonal. Callers check ok()
/// and throw their own domain error on failure.
class SpdSolver {
public:
    SpdSolver(Matrix S, double jitter_scale);

    bool ok() const { return ok_; }
    bool jittered() const { return jittered_; }

    Vector solve(const Vector& b) const { return llt_.solve(b); }
    Matrix solve(const Matrix& B) const { return llt_.solve(B); }
    Matrix lower() const { return llt_.matrixL(); }
    const Eigen::LLT<Matrix>& llt() const { return llt_; }

private:
    Eigen::LLT<Matrix> llt_;
    bool ok_ = false;
    bool jittered_ = false;
};

Matrix random_gaussian(Index rows, Index cols, Rng& rng);
Vector random_gaussian_vector(Index size, Rng& rng);

/// Haar-ish random orthogonal matrix (QR of a Gaussian matrix, signs fixed).
Matrix random_orthogonal(Index n, Rng& rng);

/// Summation with a fixed pairwise split, independent of any chunking the
/// caller may have used to produce the values.
double pairwise_sum(const double* values, std::size_t count);
double pairwise_mean(const std::vector<double>& values);

}  // namespace linalg
}  // namespace ddpred
