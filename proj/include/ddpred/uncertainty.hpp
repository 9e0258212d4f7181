#pragma once

#include <vector>

#include "ddpred/predictors.hpp"

namespace ddpred {

/// Chi-squared CDF: regularized lower incomplete gamma P(d/2, x/2),
/// series below x = d + 1 and continued fraction above; absolute error
/// below 1e-10.
double chi2_cdf(double x, int dof);

/// Inverse of chi2_cdf in x, by safeguarded Newton on a bracket.
double chi2_quantile(double p, int dof);

/// Degrees of freedom for the ellipsoid radius. The prediction error is an
/// n_y*Lp-dimensional Gaussian, so FullOutput (n_y*Lp) is the default;
/// Horizon uses the window length Lp alone for comparison (the two agree
/// for single-output systems).
enum class DofPolicy { FullOutput, Horizon };

/// Ellipsoid { y : (y - center)^T Sigma^{-1} (y - center) <= mu_p } holding
/// the true output with probability p. Construction validates symmetry,
/// factorizes Sigma (one jitter retry of 1e-10 * trace / dim), and computes
/// mu_p = chi2_quantile(p, dof); throws SingularSigma when Sigma cannot be
/// factorized.
class ConfidenceRegion {
public:
    ConfidenceRegion(Vector center, Matrix sigma, double p, int dof);

    const Vector& center() const { return center_; }
    const Matrix& sigma() const { return sigma_; }
    double mu_p() const { return mu_p_; }
    double p() const { return p_; }
    int dof() const { return dof_; }
    Index dim() const { return center_.size(); }

    /// Quadratic form (y - center)^T Sigma^{-1} (y - center), via
    /// triangular solves on the stored Cholesky factor.
    double quadratic_form(const Vector& y) const;

    /// Lower Cholesky factor of Sigma (after any jitter).
    Matrix chol_lower() const { return llt_.matrixL(); }

private:
    Vector center_;
    Matrix sigma_;
    double p_;
    int dof_;
    double mu_p_;
    Eigen::LLT<Matrix> llt_;
};

/// Prediction-error covariance
///   Sigma = [-Gamma I] Sigma_g [-Gamma I]^T + Gamma Sigma_yini Gamma^T.
/// Under iid noise Sigma_g = sigma2 |g|^2 I, which reduces to
/// sigma2 |g|^2 (Gamma Gamma^T + I) + sigma2 Gamma Gamma^T.
Matrix assemble_sigma(const Matrix& gamma, const Vector& g,
                      const NoiseModel& noise);

/// Region centered at y - Gamma * delta with covariance from
/// assemble_sigma. n_y is only consulted by the Horizon dof policy.
ConfidenceRegion confidence_region(const PredictionResult& result,
                                   const Matrix& gamma, const NoiseModel& noise,
                                   double p,
                                   DofPolicy dof_policy = DofPolicy::FullOutput,
                                   Index n_y = 1);

/// Membership test; the boundary counts as inside.
bool contains(const ConfidenceRegion& region, const Vector& y_true);

/// Estimated mean squared prediction error tr(Sigma) + |Gamma delta|^2.
double estimated_mse(const Matrix& gamma, const PredictionResult& result,
                     const NoiseModel& noise);

/// Boundary samples of a two-dimensional region:
/// center + sqrt(mu_p) * L * (cos t, sin t) over a uniform angle grid.
std::vector<Eigen::Vector2d> ellipse_boundary(const ConfidenceRegion& region,
                                              int n_points);

}  // namespace ddpred
