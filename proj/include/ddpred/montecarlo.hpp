#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddpred/uncertainty.hpp"

namespace ddpred {

/// Predictor identities under comparison (the MSE-* entries are the
/// minimum-MSE predictor with the named free-response source).
enum class PredictorId { Pinv, Sub, SMM, WD, MseMb, MseSub, MseSmm, MseWd };

/// Free-response source used for confidence regions and estimated MSE.
enum class CrSource { MB, Sub, SMM, WD };

/// How the prediction initial condition is produced. SimulatedPrefix draws
/// a unit-Gaussian past input and a past state from the system's stationary
/// distribution under unit-Gaussian inputs, simulates the L0-step prefix
/// for the true y_ini and adds measurement noise (so the noise decomposition
/// behind the confidence regions holds exactly and the instance matches the
/// excitation of the collected data). RawGaussian draws y_ini directly from
/// a unit Gaussian; the implied true state is the least-squares fit of that
/// window, and coverage is reported as-is.
enum class IcMode { SimulatedPrefix, RawGaussian };

struct CampaignConfig {
    int n_systems = 200;
    IndexInterval n_x_range{3, 8};
    Index n_u = 1;
    Index n_y = 1;
    Index L = 20;
    Index L0 = 8;
    Index Lp = 12;
    Index M = 320;
    double sigma2 = 0.1;
    std::vector<double> p_levels{0.95, 0.99};
    std::vector<PredictorId> predictors{PredictorId::Sub, PredictorId::SMM,
                                        PredictorId::MseSmm};
    std::vector<CrSource> gamma_sources{CrSource::MB, CrSource::Sub,
                                        CrSource::SMM, CrSource::WD};
    std::uint64_t seed = 0;
    IcMode ic_mode = IcMode::SimulatedPrefix;
    Construction construction = Construction::Page;
    /// Pairing a Hankel matrix with nonzero noise breaks the iid-columns
    /// assumption; requires this explicit opt-in.
    bool allow_hankel_noise = false;
    /// Worker threads; 0 means hardware concurrency.
    int threads = 1;

    void validate() const;
};

/// Outcome of one predictor on one system.
struct RunCell {
    double err_norm = 0.0;               // |y - y0|
    std::vector<double> est_mse;          // per gamma source
    std::vector<std::uint8_t> contained;  // [source * n_p + p_index]
};

struct SystemRun {
    std::uint64_t system_seed = 0;
    Index n_x = 0;
    std::vector<RunCell> cells;  // per predictor
};

/// Per-run records plus index-ordered pairwise aggregates. Aggregate
/// vectors are flattened as [predictor], [predictor][source], and
/// [predictor][source][p_level] respectively.
struct CampaignReport {
    CampaignConfig config;
    std::vector<SystemRun> runs;
    bool regions_degenerate = false;  // sigma2 == 0: no coverage defined

    std::vector<double> empirical_mse;
    std::vector<double> mean_est_mse;
    std::vector<double> coverage;

    double empirical_mse_at(std::size_t pred) const;
    double est_mse_at(std::size_t pred, std::size_t src) const;
    double coverage_at(std::size_t pred, std::size_t src, std::size_t p) const;
};

/// Runs the full campaign: per system, draw a normalized random model,
/// collect one noisy experiment, build the signal matrix, pose a random
/// prediction instance, run every configured predictor, and score coverage,
/// estimated MSE, and squared error against the noise-free truth. The
/// entire report is a pure function of the config; failures abort with the
/// offending system seed attached.
CampaignReport run_campaign(const CampaignConfig& config);

struct SummaryTable {
    std::string title;
    std::string row_header;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> cells;
};

struct CampaignSummary {
    SummaryTable coverage;        // predictors x (region source x p level)
    SummaryTable mse_comparison;  // predictors x (empirical, estimated per source)
    SummaryTable predictor_mse;   // predictors x empirical MSE
};

CampaignSummary summarize(const CampaignReport& report);

const char* predictor_label(PredictorId id);
const char* predictor_token(PredictorId id);
const char* cr_source_label(CrSource src);
const char* cr_source_token(CrSource src);
/// Parse the lowercase tokens used in configs and on the command line;
/// returns false on unknown tokens.
bool predictor_from_token(const std::string& token, PredictorId& out);
bool cr_source_from_token(const std::string& token, CrSource& out);

}  // namespace ddpred
