#include "ddpred/predictors.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "ddpred/errors.hpp"

namespace ddpred {

namespace {

constexpr double kCholJitterScale = 1e-12;

void check_problem(const SignalMatrix& sm, const PredictionProblem& prob) {
    if (prob.u_ini.size() != sm.n_u() * sm.L0())
        throw DimensionError("u_ini must have size n_u * L0");
    if (prob.y_ini.size() != sm.n_y() * sm.L0())
        throw DimensionError("y_ini must have size n_y * L0");
    if (prob.u.size() != sm.n_u() * sm.Lp())
        throw DimensionError("u must have size n_u * Lp");
}

Vector stacked_input_rhs(const PredictionProblem& prob) {
    Vector b(prob.u_ini.size() + prob.u.size());
    b << prob.u_ini, prob.u;
    return b;
}

// Minimal positive lambda standing in for the formal lambda -> 0+ limit;
// scaled to the data so SMM and WD collapse to the same program at
// sigma2 = 0.
double lambda_floor(const SignalMatrix& sm) {
    return 1e-12 * std::max(1.0, sm.y_past().squaredNorm() / double(sm.M()));
}

// Core of solve_unified / predict_minmse_general: minimizes
// (Y_p g - y_ini)^T Q (Y_p g - y_ini) + g^T R g  s.t.  U g = b,
// where R is either lambda * I (iid ridge) or a full weight matrix.
PredictionResult solve_weighted(const SignalMatrix& sm,
                                const PredictionProblem& prob, const Matrix* Q,
                                double lambda, const Matrix* R,
                                const std::optional<Matrix>& echo_Q) {
    const auto Yp = sm.y_past();
    const auto Yf = sm.y_future();
    const auto U = sm.u_block();
    const Index M = sm.M();

    const Matrix QYp = Q ? Matrix(*Q * Yp) : Matrix(Yp);
    Matrix F = Yp.transpose() * QYp;
    if (R) {
        F += *R;
    } else {
        F.diagonal().array() += lambda;
    }
    linalg::SpdSolver Fs(0.5 * (F + F.transpose()), kCholJitterScale);
    if (!Fs.ok())
        throw InfeasibleConstraint("regularized Gram matrix F is not positive definite");

    const Vector c = QYp.transpose() * prob.y_ini;
    const Matrix FiUt = Fs.solve(Matrix(U.transpose()));
    const Vector Fic = Fs.solve(c);

    Matrix S = U * FiUt;
    linalg::SpdSolver Ss(0.5 * (S + S.transpose()), kCholJitterScale);
    if (!Ss.ok())
        throw InfeasibleConstraint(
            "input-constraint Gram matrix U F^-1 U^T is numerically singular");

    const Vector nu = Ss.solve(Vector(U * Fic - stacked_input_rhs(prob)));
    Vector g = Fic - FiUt * nu;

    PredictionResult result;
    result.y = Yf * g;
    result.delta = Yp * g - prob.y_ini;
    result.g = std::move(g);
    result.lambda = lambda;
    result.Q = echo_Q;
    return result;
}

}  // namespace

NoiseModel NoiseModel::iid(double sigma2) {
    if (!(sigma2 >= 0.0)) throw InvalidArgument("sigma2 must be nonnegative");
    NoiseModel m;
    m.sigma2_ = sigma2;
    return m;
}

NoiseModel NoiseModel::general(Matrix sigma_Y, Matrix sigma_yini) {
    auto validate = [](const Matrix& S, const char* name) {
        if (S.rows() != S.cols())
            throw DimensionError(std::string(name) + " must be square");
        const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
        if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InvalidArgument(std::string(name) + " must be symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
        const double max_eig = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -1e-10 * max_eig)
            throw InvalidArgument(std::string(name) + " must be positive semidefinite");
    };
    validate(sigma_Y, "Sigma_Y");
    validate(sigma_yini, "Sigma_yini");
    NoiseModel m;
    m.sigma_Y_ = std::move(sigma_Y);
    m.sigma_yini_ = std::move(sigma_yini);
    return m;
}

double NoiseModel::sigma2() const {
    if (!is_iid()) throw InvalidArgument("sigma2 is defined for iid noise only");
    return sigma2_;
}

const Matrix& NoiseModel::sigma_Y() const {
    if (is_iid()) throw InvalidArgument("Sigma_Y is defined for general noise only");
    return *sigma_Y_;
}

const Matrix& NoiseModel::sigma_yini() const {
    if (is_iid()) throw InvalidArgument("Sigma_yini is defined for general noise only");
    return *sigma_yini_;
}

Matrix GammaCache::get(const SignalMatrix& sm, LambdaChoice choice,
                       double sigma2) {
    const auto key = std::make_tuple(&sm, int(choice), sigma2);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        it = entries_.emplace(key, estimate_gamma(sm, gamma_lambda(sm, choice, sigma2)))
                 .first;
    }
    return it->second;
}

PredictionResult predict_pinv(const SignalMatrix& sm,
                              const PredictionProblem& prob) {
    check_problem(sm, prob);
    Matrix stack(sm.n_u() * sm.L() + sm.n_y() * sm.L0(), sm.M());
    stack << sm.u_block(), sm.y_past();
    Vector rhs(stack.rows());
    rhs << prob.u_ini, prob.u, prob.y_ini;

    PredictionResult result;
    result.g = linalg::pinv(stack) * rhs;
    result.y = sm.y_future() * result.g;
    result.delta = sm.y_past() * result.g - prob.y_ini;
    result.lambda = 0.0;
    return result;
}

PredictionResult solve_unified(const SignalMatrix& sm,
                               const PredictionProblem& prob, double lambda,
                               const std::optional<Matrix>& Q) {
    check_problem(sm, prob);
    if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
    if (Q) {
        const Index d = sm.n_y() * sm.L0();
        if (Q->rows() != d || Q->cols() != d)
            throw DimensionError("Q must be (n_y * L0) x (n_y * L0)");
    }
    return solve_weighted(sm, prob, Q ? &*Q : nullptr, lambda, nullptr, Q);
}

double lambda_for(const SignalMatrix& sm, const PredictionProblem& prob,
                  PredictorKind kind, const NoiseModel& noise,
                  const std::optional<Matrix>& Q) {
    if (!noise.is_iid())
        throw GeneralNoiseUnsupported(
            "lambda_for handles iid noise only; use predict_minmse_general");
    const double s2 = noise.sigma2();
    const double n_y = double(sm.n_y());
    switch (kind) {
        case PredictorKind::Pinv:
        case PredictorKind::Sub:
            return 0.0;
        case PredictorKind::WD:
            return n_y * double(sm.L0()) * s2;
        case PredictorKind::SMM: {
            if (s2 == 0.0) return 0.0;
            const double g_norm2 = predict_pinv(sm, prob).g.squaredNorm();
            // A zero problem has g_pinv = 0 and the same (zero) solution for
            // every lambda; drop the ratio term instead of dividing by zero.
            const double ratio = g_norm2 > 0.0 ? double(sm.Lp()) * s2 / g_norm2 : 0.0;
            return n_y * (ratio + double(sm.L()) * s2);
        }
        case PredictorKind::MinMSE: {
            if (!Q) throw MissingQ("MinMSE lambda requires the slack weight Q");
            return s2 * n_y * double(sm.Lp()) + s2 * Q->trace();
        }
    }
    throw InvalidArgument("unknown predictor kind");
}

Matrix estimate_gamma(const SignalMatrix& sm, double lambda) {
    if (lambda < 0.0) throw InvalidArgument("lambda must be nonnegative");
    const auto Yp = sm.y_past();
    const auto Yf = sm.y_future();

    if (lambda == 0.0) {
        Matrix stack(sm.n_u() * sm.L() + sm.n_y() * sm.L0(), sm.M());
        stack << sm.u_block(), sm.y_past();
        const Matrix P = linalg::pinv(stack).rightCols(sm.n_y() * sm.L0());
        return Yf * P;
    }

    const auto U = sm.u_block();
    Matrix F = Yp.transpose() * Yp;
    F.diagonal().array() += lambda;
    linalg::SpdSolver Fs(0.5 * (F + F.transpose()), kCholJitterScale);
    if (!Fs.ok()) throw SingularProjection("F = lambda I + Y_p^T Y_p is singular");

    const Matrix FiYpt = Fs.solve(Matrix(Yp.transpose()));
    const Matrix FiUt = Fs.solve(Matrix(U.transpose()));
    Matrix S = U * FiUt;
    linalg::SpdSolver Ss(0.5 * (S + S.transpose()), kCholJitterScale);
    if (!Ss.ok())
        throw SingularProjection("U F^-1 U^T is numerically singular");
    const Matrix T = Ss.solve(Matrix(U * FiYpt));
    return Yf * (FiYpt - FiUt * T);
}

double gamma_lambda(const SignalMatrix& sm, LambdaChoice choice, double sigma2) {
    switch (choice) {
        case LambdaChoice::Sub:
            return 0.0;
        case LambdaChoice::SMM:
            return double(sm.n_y()) * double(sm.L()) * sigma2;
        case LambdaChoice::WD:
            return double(sm.n_y()) * double(sm.L0()) * sigma2;
    }
    throw InvalidArgument("unknown lambda choice");
}

Matrix resolve_gamma(const GammaSource& source, const SignalMatrix& sm,
                     const NoiseModel& noise, GammaCache* cache) {
    if (const auto* mb = std::get_if<ModelBasedGamma>(&source)) {
        if (mb->model.n_y() != sm.n_y())
            throw DimensionError("gamma model output count must match the signal matrix");
        return gamma_model_based(mb->model, sm.L0(), sm.Lp());
    }
    const auto& dd = std::get<DataDrivenGamma>(source);
    const double s2 = noise.is_iid() ? noise.sigma2() : 0.0;
    if (cache) return cache->get(sm, dd.choice, s2);
    return estimate_gamma(sm, gamma_lambda(sm, dd.choice, s2));
}

PredictionResult predict(const SignalMatrix& sm, const PredictionProblem& prob,
                         PredictorKind kind, const NoiseModel& noise,
                         const std::optional<GammaSource>& gamma_source,
                         GammaCache* cache) {
    check_problem(sm, prob);
    switch (kind) {
        case PredictorKind::Pinv:
        case PredictorKind::Sub:
            return predict_pinv(sm, prob);
        case PredictorKind::SMM:
        case PredictorKind::WD: {
            const double lam = lambda_for(sm, prob, kind, noise);
            return solve_unified(sm, prob, std::max(lam, lambda_floor(sm)),
                                 std::nullopt);
        }
        case PredictorKind::MinMSE: {
            if (!gamma_source)
                throw MissingGammaSource("MinMSE prediction requires a gamma source");
            if (!noise.is_iid())
                throw GeneralNoiseUnsupported(
                    "use predict_minmse_general for general noise");
            if (noise.sigma2() == 0.0) return predict_pinv(sm, prob);
            const Matrix gamma = resolve_gamma(*gamma_source, sm, noise, cache);
            Matrix Q = gamma.transpose() * gamma;
            const double lam = lambda_for(sm, prob, PredictorKind::MinMSE, noise, Q);
            return solve_unified(sm, prob, lam, std::move(Q));
        }
    }
    throw InvalidArgument("unknown predictor kind");
}

PredictionResult predict_minmse_general(const SignalMatrix& sm,
                                        const PredictionProblem& prob,
                                        const NoiseModel& noise,
                                        const Matrix& gamma) {
    check_problem(sm, prob);
    if (noise.is_iid())
        throw InvalidArgument("predict_minmse_general requires a general noise model");
    const Index nyL0 = sm.n_y() * sm.L0();
    const Index nyLp = sm.n_y() * sm.Lp();
    const Index nyL = nyL0 + nyLp;
    const Index M = sm.M();
    if (gamma.rows() != nyLp || gamma.cols() != nyL0)
        throw DimensionError("gamma must be (n_y * Lp) x (n_y * L0)");
    const Matrix& SY = noise.sigma_Y();
    if (SY.rows() != nyL * M)
        throw DimensionError("Sigma_Y must be (n_y * L * M) square");

    // W_jk = tr(B SigmaY_(j,k) B^T) = <SigmaY_(j,k), B^T B> with B = [-Gamma I].
    Matrix B(nyLp, nyL);
    B << -gamma, Matrix::Identity(nyLp, nyLp);
    const Matrix K = B.transpose() * B;
    Matrix W(M, M);
    for (Index j = 0; j < M; ++j) {
        for (Index k = j; k < M; ++k) {
            const double w = SY.block(j * nyL, k * nyL, nyL, nyL).cwiseProduct(K).sum();
            W(j, k) = w;
            W(k, j) = w;
        }
    }
    linalg::SpdSolver Ws(W, kCholJitterScale);
    if (!Ws.ok()) throw NonPositiveW("noise weight W is not positive definite");

    Matrix Q = gamma.transpose() * gamma;
    return solve_weighted(sm, prob, &Q, 0.0, &W, Q);
}

}  // namespace ddpred
