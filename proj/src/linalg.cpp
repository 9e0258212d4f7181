#include "ddpred/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <limits>

namespace ddpred::linalg {

double rank_threshold(Index rows, Index cols, const Vector& singular_values) {
    if (singular_values.size() == 0) return 0.0;
    return double(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
           singular_values(0);
}

Index numerical_rank(const Matrix& A) {
    if (A.rows() == 0 || A.cols() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(A);
    const Vector& s = svd.singularValues();
    const double tol = rank_threshold(A.rows(), A.cols(), s);
    Index r = 0;
    while (r < s.size() && s(r) > tol) ++r;
    return r;
}

PinvResult pinv_with_rank(const Matrix& A) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double tol = rank_threshold(A.rows(), A.cols(), s);
    Index r = 0;
    while (r < s.size() && s(r) > tol) ++r;
    Matrix result = Matrix::Zero(A.cols(), A.rows());
    if (r > 0) {
        result = svd.matrixV().leftCols(r) *
                 s.head(r).cwiseInverse().asDiagonal() *
                 svd.matrixU().leftCols(r).transpose();
        // Newton-Schulz refinement within the kept subspaces; tightens the
        // eps * kappa^2 rounding of the factored solve toward eps * kappa on
        // nearly rank-deficient inputs.
        for (int step = 0; step < 2; ++step) {
            Matrix correction = result * (A * result) - result;
            if (!(correction.norm() <= 0.5 * result.norm())) break;
            result -= correction;
        }
    }
    return {std::move(result), r};
}

Matrix pinv(const Matrix& A) { return pinv_with_rank(A).pinv; }

double spectral_radius(const Matrix& A) {
    if (A.rows() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix kronecker(const Matrix& A, const Matrix& B) {
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

Matrix solve_discrete_lyapunov(const Matrix& A, const Matrix& Q) {
    const Index n = A.rows();
    Matrix lhs = Matrix::Identity(n * n, n * n) - kronecker(A, A);
    Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
    Vector w = lhs.partialPivLu().solve(q);
    Matrix W = Eigen::Map<const Matrix>(w.data(), n, n);
    return 0.5 * (W + W.transpose());
}

Matrix psd_sqrt(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

SpdSolver::SpdSolver(Matrix S, double jitter_scale) : llt_(S.rows()) {
    llt_.compute(S);
    if (llt_.info() != Eigen::Success) {
        const double jitter = jitter_scale * S.trace() / double(S.rows());
        S.diagonal().array() += jitter;
        llt_.compute(S);
        jittered_ = true;
    }
    ok_ = llt_.info() == Eigen::Success;
}

Matrix random_gaussian(Index rows, Index cols, Rng& rng) {
    Matrix G(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) G(i, j) = rng.gaussian();
    return G;
}

Vector random_gaussian_vector(Index size, Rng& rng) {
    Vector v(size);
    for (Index i = 0; i < size; ++i) v(i) = rng.gaussian();
    return v;
}

Matrix random_orthogonal(Index n, Rng& rng) {
    Matrix G = random_gaussian(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    Matrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    for (Index j = 0; j < n; ++j)
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);
    return Q;
}

double pairwise_sum(const double* values, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += values[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

double pairwise_mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values.data(), values.size()) / double(values.size());
}

}  // namespace ddpred::linalg
