#include "ddpred/uncertainty.hpp"

#include <cmath>

#include "ddpred/errors.hpp"

namespace ddpred {

namespace {

constexpr int kMaxGammaIterations = 1000;
constexpr double kSigmaJitterScale = 1e-10;

// Regularized lower incomplete gamma P(a, x) by power series; good for
// x below a + 1.
double lower_gamma_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < kMaxGammaIterations; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued
// fraction; good for x above a.
double upper_gamma_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxGammaIterations; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double chi2_pdf(double x, int dof) {
    const double a = 0.5 * dof;
    return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::numbers::ln2 -
                    std::lgamma(a));
}

}  // namespace

double chi2_cdf(double x, int dof) {
    if (dof < 1) throw InvalidArgument("dof must be positive");
    if (x < 0.0) throw InvalidArgument("x must be nonnegative");
    if (x == 0.0) return 0.0;
    const double a = 0.5 * dof;
    const double xg = 0.5 * x;
    if (x < double(dof) + 1.0) return lower_gamma_series(a, xg);
    return 1.0 - upper_gamma_cf(a, xg);
}

double chi2_quantile(double p, int dof) {
    if (dof < 1) throw InvalidArgument("dof must be positive");
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("p must lie in (0, 1)");

    double lo = 0.0;
    double hi = double(dof) + 10.0 * std::sqrt(2.0 * dof) + 10.0;
    while (chi2_cdf(hi, dof) < p) hi *= 2.0;

    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = chi2_cdf(x, dof) - p;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        const double pdf = chi2_pdf(x, dof);
        double next = pdf > 0.0 ? x - f / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-12 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

ConfidenceRegion::ConfidenceRegion(Vector center, Matrix sigma, double p, int dof)
    : center_(std::move(center)), sigma_(std::move(sigma)), p_(p), dof_(dof) {
    if (!(p_ > 0.0 && p_ < 1.0)) throw InvalidArgument("p must lie in (0, 1)");
    if (dof_ < 1) throw InvalidArgument("dof must be positive");
    if (sigma_.rows() != sigma_.cols() || sigma_.rows() != center_.size())
        throw DimensionError("Sigma must be square and match the center");
    const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidArgument("Sigma must be symmetric");
    sigma_ = 0.5 * (sigma_ + sigma_.transpose());

    linalg::SpdSolver solver(sigma_, kSigmaJitterScale);
    if (!solver.ok())
        throw SingularSigma("Sigma is not positive definite (even after jitter)");
    llt_ = solver.llt();
    mu_p_ = chi2_quantile(p_, dof_);
}

double ConfidenceRegion::quadratic_form(const Vector& y) const {
    if (y.size() != center_.size())
        throw DimensionError("point dimension must match the region");
    const Vector z = llt_.matrixL().solve(y - center_);
    return z.squaredNorm();
}

Matrix assemble_sigma(const Matrix& gamma, const Vector& g,
                      const NoiseModel& noise) {
    const Index nyLp = gamma.rows();
    const Index nyL0 = gamma.cols();
    const Index nyL = nyL0 + nyLp;

    if (noise.is_iid()) {
        const double s2 = noise.sigma2();
        const Matrix GGt = gamma * gamma.transpose();
        Matrix sigma = s2 * g.squaredNorm() * GGt;
        sigma.diagonal().array() += s2 * g.squaredNorm();
        sigma += s2 * GGt;
        return 0.5 * (sigma + sigma.transpose());
    }

    const Matrix& SY = noise.sigma_Y();
    if (SY.rows() != nyL * g.size())
        throw DimensionError("Sigma_Y size must equal n_y * L * M");
    if (noise.sigma_yini().rows() != nyL0)
        throw DimensionError("Sigma_yini size must equal n_y * L0");

    Matrix sigma_g = Matrix::Zero(nyL, nyL);
    for (Index j = 0; j < g.size(); ++j)
        for (Index k = 0; k < g.size(); ++k)
            sigma_g += g(j) * g(k) * SY.block(j * nyL, k * nyL, nyL, nyL);

    Matrix B(nyLp, nyL);
    B << -gamma, Matrix::Identity(nyLp, nyLp);
    Matrix sigma = B * sigma_g * B.transpose() +
                   gamma * noise.sigma_yini() * gamma.transpose();
    return 0.5 * (sigma + sigma.transpose());
}

ConfidenceRegion confidence_region(const PredictionResult& result,
                                   const Matrix& gamma, const NoiseModel& noise,
                                   double p, DofPolicy dof_policy, Index n_y) {
    if (gamma.rows() != result.y.size() || gamma.cols() != result.delta.size())
        throw DimensionError("gamma shape must match the prediction result");
    Vector center = result.y - gamma * result.delta;
    Matrix sigma = assemble_sigma(gamma, result.g, noise);
    const Index dof =
        dof_policy == DofPolicy::FullOutput ? gamma.rows() : gamma.rows() / n_y;
    return ConfidenceRegion(std::move(center), std::move(sigma), p, int(dof));
}

bool contains(const ConfidenceRegion& region, const Vector& y_true) {
    // The set is closed; the relative slack keeps boundary points computed in
    // floating point inside.
    return region.quadratic_form(y_true) <= region.mu_p() * (1.0 + 1e-9);
}

double estimated_mse(const Matrix& gamma, const PredictionResult& result,
                     const NoiseModel& noise) {
    return assemble_sigma(gamma, result.g, noise).trace() +
           (gamma * result.delta).squaredNorm();
}

std::vector<Eigen::Vector2d> ellipse_boundary(const ConfidenceRegion& region,
                                              int n_points) {
    if (region.dim() != 2)
        throw NotTwoDimensional("ellipse boundary requires a 2-D region");
    if (n_points < 1) throw InvalidArgument("n_points must be positive");
    const Matrix L = region.chol_lower();
    const double scale = std::sqrt(region.mu_p());
    std::vector<Eigen::Vector2d> points;
    points.reserve(std::size_t(n_points));
    for (int k = 0; k < n_points; ++k) {
        const double theta = 2.0 * std::numbers::pi * double(k) / double(n_points);
        Eigen::Vector2d dir(std::cos(theta), std::sin(theta));
        points.emplace_back(region.center() + scale * (L * dir));
    }
    return points;
}

}  // namespace ddpred
