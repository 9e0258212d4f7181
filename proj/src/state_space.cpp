#include "ddpred/state_space.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <complex>
#include <string>
#include <vector>

#include "ddpred/errors.hpp"

namespace ddpred {

namespace {

constexpr double kStabilityTol = 1e-6;
constexpr int kMaxGenerationAttempts = 100;

void require(bool cond, const char* message) {
    if (!cond) throw DimensionError(message);
}

}  // namespace

StateSpaceModel::StateSpaceModel(Matrix A, Matrix B, Matrix C, Matrix D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
    require(A_.rows() >= 1 && A_.rows() == A_.cols(), "A must be square and nonempty");
    require(B_.rows() == A_.rows() && B_.cols() >= 1, "B must be n_x x n_u");
    require(C_.cols() == A_.rows() && C_.rows() >= 1, "C must be n_y x n_x");
    require(D_.rows() == C_.rows() && D_.cols() == B_.cols(), "D must be n_y x n_u");
    if (!(A_.allFinite() && B_.allFinite() && C_.allFinite() && D_.allFinite()))
        throw InvalidArgument("state-space matrices must be finite");
}

Trajectory::Trajectory(Matrix inputs, Matrix outputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    if (inputs_.cols() != outputs_.cols())
        throw LengthMismatch("inputs and outputs must have equal length");
    if (inputs_.cols() < 1) throw LengthMismatch("trajectory must have length >= 1");
    if (inputs_.rows() < 1 || outputs_.rows() < 1)
        throw DimensionError("trajectory needs at least one input and output channel");
}

Trajectory simulate(const StateSpaceModel& model, const Vector& x0,
                    const Matrix& inputs, const std::optional<Matrix>& noise) {
    require(x0.size() == model.n_x(), "x0 size must equal n_x");
    require(inputs.rows() == model.n_u(), "input rows must equal n_u");
    require(inputs.cols() >= 1, "inputs must be nonempty");
    if (noise) {
        require(noise->rows() == model.n_y(), "noise rows must equal n_y");
        require(noise->cols() == inputs.cols(), "noise length must match inputs");
    }
    const Index T = inputs.cols();
    Matrix outputs(model.n_y(), T);
    Vector x = x0;
    for (Index t = 0; t < T; ++t) {
        outputs.col(t) = model.C() * x + model.D() * inputs.col(t);
        if (noise) outputs.col(t) += noise->col(t);
        x = model.A() * x + model.B() * inputs.col(t);
    }
    return Trajectory(inputs, std::move(outputs));
}

Vector advance_state(const StateSpaceModel& model, const Vector& x0,
                     const Matrix& inputs) {
    require(x0.size() == model.n_x(), "x0 size must equal n_x");
    require(inputs.rows() == model.n_u(), "input rows must equal n_u");
    Vector x = x0;
    for (Index t = 0; t < inputs.cols(); ++t)
        x = model.A() * x + model.B() * inputs.col(t);
    return x;
}

Matrix extended_observability(const StateSpaceModel& model, Index k) {
    if (k < 1) throw InvalidArgument("k must be positive");
    Matrix O(model.n_y() * k, model.n_x());
    Matrix CAj = model.C();
    for (Index j = 0; j < k; ++j) {
        O.middleRows(j * model.n_y(), model.n_y()) = CAj;
        if (j + 1 < k) CAj = CAj * model.A();
    }
    return O;
}

Index observability_index(const StateSpaceModel& model) {
    const Matrix O_full = extended_observability(model, model.n_x());
    if (linalg::numerical_rank(O_full) < model.n_x())
        throw UnobservableSystem("observability matrix is rank deficient");
    for (Index k = 1; k <= model.n_x(); ++k) {
        if (linalg::numerical_rank(extended_observability(model, k)) == model.n_x())
            return k;
    }
    throw UnobservableSystem("observability matrix is rank deficient");
}

Matrix gamma_model_based(const StateSpaceModel& model, Index L0, Index Lp) {
    if (L0 < 1 || Lp < 1) throw InvalidArgument("L0 and Lp must be positive");
    const Index lag = observability_index(model);
    if (L0 < lag)
        throw LagTooShort("L0 = " + std::to_string(L0) +
                          " is below the observability index " + std::to_string(lag));
    const Matrix O = extended_observability(model, L0 + Lp);
    const Matrix O_past = O.topRows(model.n_y() * L0);
    const Matrix O_future = O.bottomRows(model.n_y() * Lp);
    return O_future * linalg::pinv(O_past);
}

Matrix controllability_gramian(const StateSpaceModel& model) {
    if (linalg::spectral_radius(model.A()) >= 1.0 - kStabilityTol)
        throw UnstableSystem("spectral radius is not below 1 - 1e-6");
    return linalg::solve_discrete_lyapunov(model.A(),
                                           model.B() * model.B().transpose());
}

double h2_norm(const StateSpaceModel& model) {
    const Matrix Wc = controllability_gramian(model);
    const double value = (model.C() * Wc * model.C().transpose()).trace() +
                         (model.D() * model.D().transpose()).trace();
    return std::sqrt(std::max(value, 0.0));
}

StateSpaceModel random_system(IndexInterval n_x_range, Index n_u, Index n_y,
                              Rng& rng) {
    if (n_x_range.lo < 1 || n_x_range.hi > 12 || n_x_range.lo > n_x_range.hi)
        throw InvalidArgument("n_x range must lie within [1, 12]");
    if (n_u < 1 || n_y < 1) throw InvalidArgument("n_u and n_y must be positive");

    // Minimum pairwise spectral separation. Independent magnitude draws
    // collide far more often than the eigenvalues of random matrices do
    // (those repel); a near-collided spectrum is numerically unobservable
    // over short windows, which defeats the benchmark's purpose.
    constexpr double kMinEigenGap = 0.05;

    for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
        const Index n_x = rng.uniform_int(n_x_range.lo, n_x_range.hi);

        // Eigenvalue blocks with magnitudes uniform on [0.1, 0.95].
        Matrix lambda = Matrix::Zero(n_x, n_x);
        std::vector<std::complex<double>> eigs;
        Index i = 0;
        while (i < n_x) {
            const double mag = 0.1 + 0.85 * rng.uniform();
            if (n_x - i >= 2 && rng.uniform() < 0.5) {
                const double theta = std::numbers::pi * rng.uniform();
                const double re = mag * std::cos(theta);
                const double im = mag * std::sin(theta);
                lambda(i, i) = re;
                lambda(i, i + 1) = im;
                lambda(i + 1, i) = -im;
                lambda(i + 1, i + 1) = re;
                eigs.emplace_back(re, im);
                eigs.emplace_back(re, -im);
                i += 2;
            } else {
                const double value = (rng.uniform() < 0.5 ? -1.0 : 1.0) * mag;
                lambda(i, i) = value;
                eigs.emplace_back(value, 0.0);
                i += 1;
            }
        }
        bool separated = true;
        for (std::size_t a = 0; a < eigs.size() && separated; ++a)
            for (std::size_t b = a + 1; b < eigs.size() && separated; ++b)
                separated = std::abs(eigs[a] - eigs[b]) >= kMinEigenGap;
        if (!separated) continue;

        const Matrix Q = linalg::random_orthogonal(n_x, rng);
        Matrix A = Q * lambda * Q.transpose();
        Matrix B = linalg::random_gaussian(n_x, n_u, rng);
        Matrix C = linalg::random_gaussian(n_y, n_x, rng);
        Matrix D = Matrix::Zero(n_y, n_u);
        if (rng.uniform() < 0.5) D = linalg::random_gaussian(n_y, n_u, rng);

        StateSpaceModel candidate(A, B, C, D);
        try {
            observability_index(candidate);
        } catch (const UnobservableSystem&) {
            continue;
        }
        // Identifiability margins: a mode that is nearly invisible in the
        // outputs or nearly unreachable from the inputs makes the drawn
        // system useless as a benchmark (no finite data resolves it).
        {
            Eigen::JacobiSVD<Matrix> obs(extended_observability(candidate, n_x));
            const Vector& sv = obs.singularValues();
            if (sv(n_x - 1) < 3e-3 * sv(0)) continue;
        }
        Matrix Wc;
        try {
            Wc = controllability_gramian(candidate);
        } catch (const UnstableSystem&) {
            continue;
        }
        {
            Eigen::SelfAdjointEigenSolver<Matrix> es(Wc, Eigen::EigenvaluesOnly);
            const Vector& ev = es.eigenvalues();
            if (ev(0) < 1e-5 * ev(n_x - 1)) continue;
        }
        const double gain = std::sqrt(
            std::max((C * Wc * C.transpose()).trace() + (D * D.transpose()).trace(),
                     0.0));
        if (!(gain > 1e-8)) continue;
        return StateSpaceModel(std::move(A), std::move(B), C / gain, D / gain);
    }
    throw GenerationFailed("no observable stable system after 100 attempts");
}

}  // namespace ddpred
