#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <variant>

#include "ddpred/signal_matrix.hpp"

namespace ddpred {

/// Gaussian output-noise description. The i.i.d. variant keeps only the
/// per-sample variance (its covariances are implicit multiples of the
/// identity and never materialized); the general variant carries explicit
/// covariances for vec(col(Y_p, Y_f)) and for y_ini.
class NoiseModel {
public:
    static NoiseModel iid(double sigma2);
    static NoiseModel general(Matrix sigma_Y, Matrix sigma_yini);

    bool is_iid() const { return !sigma_Y_.has_value(); }
    double sigma2() const;
    const Matrix& sigma_Y() const;
    const Matrix& sigma_yini() const;

private:
    NoiseModel() = default;
    double sigma2_ = 0.0;
    std::optional<Matrix> sigma_Y_;
    std::optional<Matrix> sigma_yini_;
};

/// One prediction instance: the measured past window and the future inputs.
struct PredictionProblem {
    Vector u_ini;  // n_u * L0
    Vector y_ini;  // n_y * L0
    Vector u;      // n_u * Lp
};

/// Predicted outputs together with the internals that produced them.
/// y = Y_f * g by construction; delta = Y_p * g - y_ini; lambda and Q echo
/// the regularization actually used (lambda 0 and Q absent for the
/// pseudo-inverse path).
struct PredictionResult {
    Vector y;
    Vector g;
    Vector delta;
    double lambda = 0.0;
    std::optional<Matrix> Q;
};

enum class PredictorKind { Pinv, Sub, SMM, WD, MinMSE };

/// Hyperparameter family for the data-driven free-response estimate:
/// Sub uses the lambda -> 0 limit, SMM uses n_y*L*sigma2, WD uses
/// n_y*L0*sigma2.
enum class LambdaChoice { Sub, SMM, WD };

struct ModelBasedGamma {
    StateSpaceModel model;
};
struct DataDrivenGamma {
    LambdaChoice choice;
};
using GammaSource = std::variant<ModelBasedGamma, DataDrivenGamma>;

/// Memo for estimate_gamma results, keyed by signal-matrix identity,
/// lambda choice, and noise level. Safe under the single-writer-then-
/// many-readers pattern of a Monte Carlo campaign (a mutex guards every
/// lookup, so concurrent first use is also fine).
class GammaCache {
public:
    Matrix get(const SignalMatrix& sm, LambdaChoice choice, double sigma2);

private:
    std::mutex mutex_;
    std::map<std::tuple<const SignalMatrix*, int, double>, Matrix> entries_;
};

/// Noise-free predictor: g is the pseudo-inverse solution of
/// col(U_p, U_f, Y_p) g = col(u_ini, u, y_ini). Exact when the signal
/// matrix satisfies the rank condition and the data are noise free.
PredictionResult predict_pinv(const SignalMatrix& sm,
                              const PredictionProblem& prob);

/// Unified regularized predictor: minimizes |delta|^2_Q + lambda * |g|^2
/// subject to col(U_p, U_f) g = col(u_ini, u) and delta = Y_p g - y_ini
/// (Q defaults to the identity). Solved through the eliminated KKT system
/// with Cholesky factorizations; a singular input-constraint Gram matrix
/// raises InfeasibleConstraint.
PredictionResult solve_unified(const SignalMatrix& sm,
                               const PredictionProblem& prob, double lambda,
                               const std::optional<Matrix>& Q = std::nullopt);

/// Regularizer weight of each predictor family under i.i.d. noise.
/// SMM recomputes the pseudo-inverse solution of the same problem for its
/// |g_pinv|^2 term; MinMSE requires the slack weight Q.
double lambda_for(const SignalMatrix& sm, const PredictionProblem& prob,
                  PredictorKind kind, const NoiseModel& noise,
                  const std::optional<Matrix>& Q = std::nullopt);

/// Data-driven estimate of the free-response map y_ini -> future outputs:
///   Y_f (F^{-1} - F^{-1} U^T (U F^{-1} U^T)^{-1} U F^{-1}) Y_p^T
/// with F = lambda I + Y_p^T Y_p and U = col(U_p, U_f). For lambda = 0,
/// F is typically singular and the equivalent construction from the last
/// n_y*L0 columns of pinv(col(U_p, U_f, Y_p)) is used instead.
Matrix estimate_gamma(const SignalMatrix& sm, double lambda);

/// The lambda used by estimate_gamma for each choice (the SMM value here
/// is n_y*L*sigma2: the initial condition of the free-response problem is
/// known exactly, so the |g_pinv|^2 term of the predictor drops out).
double gamma_lambda(const SignalMatrix& sm, LambdaChoice choice, double sigma2);

/// Materializes the free-response map from either source.
Matrix resolve_gamma(const GammaSource& source, const SignalMatrix& sm,
                     const NoiseModel& noise, GammaCache* cache = nullptr);

/// Dispatch over the predictor family. Pinv and Sub share the
/// pseudo-inverse solution; SMM and WD run the unified program with their
/// lambda (floored at a tiny positive value so the sigma2 = 0 limit stays
/// well posed); MinMSE uses Q = Gamma^T Gamma and
/// lambda = sigma2 * (n_y * Lp + tr(Q)), falling back to the pseudo-inverse
/// solution at sigma2 = 0 where that objective degenerates.
PredictionResult predict(const SignalMatrix& sm, const PredictionProblem& prob,
                         PredictorKind kind, const NoiseModel& noise,
                         const std::optional<GammaSource>& gamma_source = std::nullopt,
                         GammaCache* cache = nullptr);

/// Minimum-MSE predictor under a general output-noise covariance:
/// minimizes delta^T Gamma^T Gamma delta + g^T W g with
/// W_jk = tr([-Gamma I] SigmaY_(j,k) [-Gamma I]^T) over the same
/// constraints as solve_unified. Materializes the M x M weight, so meant
/// for desk-scale M.
PredictionResult predict_minmse_general(const SignalMatrix& sm,
                                        const PredictionProblem& prob,
                                        const NoiseModel& noise,
                                        const Matrix& gamma);

}  // namespace ddpred
