#include "ddpred/montecarlo.hpp"

#include <atomic>
#include <thread>

#include "ddpred/errors.hpp"

namespace ddpred {

namespace {

struct PredictorSpec {
    PredictorKind kind;
    std::optional<LambdaChoice> gamma_choice;  // MinMSE data-driven source
    bool model_based = false;                  // MinMSE model-based source
};

PredictorSpec spec_of(PredictorId id) {
    switch (id) {
        case PredictorId::Pinv: return {PredictorKind::Pinv, std::nullopt, false};
        case PredictorId::Sub: return {PredictorKind::Sub, std::nullopt, false};
        case PredictorId::SMM: return {PredictorKind::SMM, std::nullopt, false};
        case PredictorId::WD: return {PredictorKind::WD, std::nullopt, false};
        case PredictorId::MseMb: return {PredictorKind::MinMSE, std::nullopt, true};
        case PredictorId::MseSub: return {PredictorKind::MinMSE, LambdaChoice::Sub, false};
        case PredictorId::MseSmm: return {PredictorKind::MinMSE, LambdaChoice::SMM, false};
        case PredictorId::MseWd: return {PredictorKind::MinMSE, LambdaChoice::WD, false};
    }
    throw InvalidArgument("unknown predictor id");
}

LambdaChoice choice_of(CrSource src) {
    switch (src) {
        case CrSource::Sub: return LambdaChoice::Sub;
        case CrSource::SMM: return LambdaChoice::SMM;
        case CrSource::WD: return LambdaChoice::WD;
        default: throw InvalidArgument("model-based source has no lambda choice");
    }
}

Matrix as_columns(const Vector& stacked, Index channels) {
    return Eigen::Map<const Matrix>(stacked.data(), channels,
                                    stacked.size() / channels);
}

Vector as_vector(const Matrix& columns) {
    return Eigen::Map<const Vector>(columns.data(), columns.size());
}

SystemRun run_one_system(const CampaignConfig& cfg,
                         const std::vector<double>& mu_p_table, int index) {
    const Rng sys = Rng(cfg.seed).split(std::uint64_t(index));
    Rng model_rng = sys.split(0);
    Rng data_rng = sys.split(1);
    Rng prob_rng = sys.split(2);

    SystemRun run;
    run.system_seed = sys.stream_id();

    const StateSpaceModel model =
        random_system(cfg.n_x_range, cfg.n_u, cfg.n_y, model_rng);
    run.n_x = model.n_x();

    // One data experiment from rest, long enough for M columns.
    const Index T = cfg.construction == Construction::Hankel
                        ? cfg.M + cfg.L - 1
                        : cfg.M * cfg.L + cfg.L0;
    const Matrix u_data = linalg::random_gaussian(cfg.n_u, T, data_rng);
    std::optional<Matrix> w_data;
    if (cfg.sigma2 > 0.0)
        w_data = std::sqrt(cfg.sigma2) * linalg::random_gaussian(cfg.n_y, T, data_rng);
    const Trajectory traj =
        simulate(model, Vector::Zero(model.n_x()), u_data, w_data);
    const SignalMatrix sm = cfg.construction == Construction::Hankel
                                ? build_hankel(traj, cfg.L, cfg.L0)
                                : build_page(traj, cfg.L, cfg.L0);

    // Prediction instance with unit-Gaussian inputs.
    PredictionProblem prob;
    prob.u_ini = linalg::random_gaussian_vector(cfg.n_u * cfg.L0, prob_rng);
    prob.u = linalg::random_gaussian_vector(cfg.n_u * cfg.Lp, prob_rng);
    const Matrix u_ini_cols = as_columns(prob.u_ini, cfg.n_u);

    Vector x0;
    if (cfg.ic_mode == IcMode::SimulatedPrefix) {
        // The past state is drawn from the stationary distribution a
        // unit-Gaussian-input experiment induces, so prediction instances
        // stay within the excitation envelope of the collected data (and the
        // draw is invariant under state-coordinate changes).
        const Vector x_past =
            linalg::psd_sqrt(controllability_gramian(model)) *
            linalg::random_gaussian_vector(model.n_x(), prob_rng);
        const Trajectory prefix =
            simulate(model, x_past, u_ini_cols, std::nullopt);
        prob.y_ini = as_vector(prefix.outputs());
        x0 = advance_state(model, x_past, u_ini_cols);
        if (cfg.sigma2 > 0.0)
            prob.y_ini += std::sqrt(cfg.sigma2) *
                          linalg::random_gaussian_vector(cfg.n_y * cfg.L0, prob_rng);
    } else {
        prob.y_ini = linalg::random_gaussian_vector(cfg.n_y * cfg.L0, prob_rng);
        // Implied past state: least-squares fit of the drawn output window
        // after removing the forced response of the drawn inputs.
        const Trajectory forced = simulate(model, Vector::Zero(model.n_x()),
                                           u_ini_cols, std::nullopt);
        const Vector free_part = prob.y_ini - as_vector(forced.outputs());
        const Vector x_past =
            linalg::pinv(extended_observability(model, cfg.L0)) * free_part;
        x0 = advance_state(model, x_past, u_ini_cols);
    }
    const Vector y0 =
        as_vector(simulate(model, x0, as_columns(prob.u, cfg.n_u)).outputs());

    const NoiseModel noise = NoiseModel::iid(cfg.sigma2);
    GammaCache cache;

    std::vector<Matrix> gammas;
    gammas.reserve(cfg.gamma_sources.size());
    for (CrSource src : cfg.gamma_sources) {
        if (src == CrSource::MB)
            gammas.push_back(gamma_model_based(model, cfg.L0, cfg.Lp));
        else
            gammas.push_back(cache.get(sm, choice_of(src), cfg.sigma2));
    }

    const std::size_t n_src = cfg.gamma_sources.size();
    const std::size_t n_p = cfg.p_levels.size();
    run.cells.reserve(cfg.predictors.size());
    for (PredictorId id : cfg.predictors) {
        const PredictorSpec spec = spec_of(id);
        std::optional<GammaSource> source;
        if (spec.model_based)
            source = ModelBasedGamma{model};
        else if (spec.gamma_choice)
            source = DataDrivenGamma{*spec.gamma_choice};
        const PredictionResult res =
            predict(sm, prob, spec.kind, noise, source, &cache);

        RunCell cell;
        cell.err_norm = (res.y - y0).norm();
        cell.est_mse.resize(n_src);
        cell.contained.assign(n_src * n_p, 0);
        for (std::size_t s = 0; s < n_src; ++s) {
            cell.est_mse[s] = estimated_mse(gammas[s], res, noise);
            if (cfg.sigma2 > 0.0) {
                const ConfidenceRegion region = confidence_region(
                    res, gammas[s], noise, cfg.p_levels.front(),
                    DofPolicy::FullOutput, cfg.n_y);
                const double qf = region.quadratic_form(y0);
                for (std::size_t pi = 0; pi < n_p; ++pi)
                    cell.contained[s * n_p + pi] = qf <= mu_p_table[pi] ? 1 : 0;
            }
        }
        run.cells.push_back(std::move(cell));
    }
    return run;
}

void aggregate(CampaignReport& report) {
    const auto& cfg = report.config;
    const std::size_t n_pred = cfg.predictors.size();
    const std::size_t n_src = cfg.gamma_sources.size();
    const std::size_t n_p = cfg.p_levels.size();
    const std::size_t n_sys = report.runs.size();

    report.empirical_mse.assign(n_pred, 0.0);
    report.mean_est_mse.assign(n_pred * n_src, 0.0);
    report.coverage.assign(n_pred * n_src * n_p,
                           report.regions_degenerate
                               ? std::numeric_limits<double>::quiet_NaN()
                               : 0.0);

    std::vector<double> column(n_sys);
    for (std::size_t pr = 0; pr < n_pred; ++pr) {
        for (std::size_t i = 0; i < n_sys; ++i) {
            const double e = report.runs[i].cells[pr].err_norm;
            column[i] = e * e;
        }
        report.empirical_mse[pr] = linalg::pairwise_mean(column);
        for (std::size_t s = 0; s < n_src; ++s) {
            for (std::size_t i = 0; i < n_sys; ++i)
                column[i] = report.runs[i].cells[pr].est_mse[s];
            report.mean_est_mse[pr * n_src + s] = linalg::pairwise_mean(column);
            if (report.regions_degenerate) continue;
            for (std::size_t pi = 0; pi < n_p; ++pi) {
                for (std::size_t i = 0; i < n_sys; ++i)
                    column[i] =
                        double(report.runs[i].cells[pr].contained[s * n_p + pi]);
                report.coverage[(pr * n_src + s) * n_p + pi] =
                    linalg::pairwise_mean(column);
            }
        }
    }
}

}  // namespace

void CampaignConfig::validate() const {
    if (n_systems < 1) throw InvalidArgument("n_systems must be positive");
    if (n_x_range.lo < 1 || n_x_range.hi > 12 || n_x_range.lo > n_x_range.hi)
        throw InvalidArgument("n_x range must lie within [1, 12]");
    if (n_u < 1 || n_y < 1) throw InvalidArgument("channel counts must be positive");
    if (L0 < 1 || Lp < 1 || L0 + Lp != L)
        throw InvalidArgument("campaign requires L0 >= 1, Lp >= 1, L0 + Lp = L");
    // Worst-case observability index of a drawn system is ceil(n_x / n_y);
    // the free-response map needs L0 at or above it.
    if (L0 * n_y < n_x_range.hi)
        throw InvalidArgument(
            "L0 must be at least ceil(n_x_hi / n_y) so every drawn system's "
            "past window pins down its state");
    if (M < 1) throw InvalidArgument("M must be positive");
    if (!(sigma2 >= 0.0)) throw InvalidArgument("sigma2 must be nonnegative");
    if (p_levels.empty()) throw InvalidArgument("p_levels must be nonempty");
    for (double p : p_levels)
        if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("p levels must lie in (0, 1)");
    if (predictors.empty()) throw InvalidArgument("predictors must be nonempty");
    if (gamma_sources.empty()) throw InvalidArgument("gamma_sources must be nonempty");
    if (construction == Construction::Independent)
        throw InvalidArgument("campaign supports page or hankel construction");
    if (construction == Construction::Hankel && sigma2 > 0.0 && !allow_hankel_noise)
        throw InvalidArgument(
            "hankel construction with noisy data needs allow_hankel_noise "
            "(iid-columns assumption does not hold)");
    if (threads < 0) throw InvalidArgument("threads must be nonnegative");
}

double CampaignReport::empirical_mse_at(std::size_t pred) const {
    return empirical_mse.at(pred);
}

double CampaignReport::est_mse_at(std::size_t pred, std::size_t src) const {
    return mean_est_mse.at(pred * config.gamma_sources.size() + src);
}

double CampaignReport::coverage_at(std::size_t pred, std::size_t src,
                                   std::size_t p) const {
    const std::size_t n_src = config.gamma_sources.size();
    const std::size_t n_p = config.p_levels.size();
    return coverage.at((pred * n_src + src) * n_p + p);
}

CampaignReport run_campaign(const CampaignConfig& config) {
    config.validate();

    std::vector<double> mu_p_table;
    mu_p_table.reserve(config.p_levels.size());
    for (double p : config.p_levels)
        mu_p_table.push_back(chi2_quantile(p, int(config.n_y * config.Lp)));

    CampaignReport report;
    report.config = config;
    report.regions_degenerate = config.sigma2 == 0.0;
    report.runs.resize(std::size_t(config.n_systems));

    int n_threads = config.threads == 0
                        ? int(std::thread::hardware_concurrency())
                        : config.threads;
    n_threads = std::clamp(n_threads, 1, config.n_systems);

    std::vector<std::string> failures(std::size_t(config.n_systems));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= config.n_systems) return;
            try {
                report.runs[std::size_t(i)] = run_one_system(config, mu_p_table, i);
            } catch (const std::exception& e) {
                report.runs[std::size_t(i)].system_seed =
                    Rng(config.seed).split(std::uint64_t(i)).stream_id();
                failures[std::size_t(i)] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < failures.size(); ++i) {
        if (!failures[i].empty())
            throw CampaignError("system " + std::to_string(i) + " (seed " +
                                std::to_string(report.runs[i].system_seed) +
                                "): " + failures[i]);
    }

    aggregate(report);
    return report;
}

CampaignSummary summarize(const CampaignReport& report) {
    const auto& cfg = report.config;
    const std::size_t n_pred = cfg.predictors.size();
    const std::size_t n_src = cfg.gamma_sources.size();
    const std::size_t n_p = cfg.p_levels.size();

    CampaignSummary out;

    auto format_p = [](double p) {
        std::string s = std::to_string(p);
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };

    out.coverage.title = "empirical confidence levels";
    out.coverage.row_header = "predictor";
    for (std::size_t s = 0; s < n_src; ++s)
        for (std::size_t pi = 0; pi < n_p; ++pi)
            out.coverage.col_labels.push_back(
                std::string(cr_source_label(cfg.gamma_sources[s])) + "@" +
                format_p(cfg.p_levels[pi]));

    out.mse_comparison.title = "estimated vs empirical MSE";
    out.mse_comparison.row_header = "predictor";
    out.mse_comparison.col_labels.push_back("Empirical");
    for (std::size_t s = 0; s < n_src; ++s)
        out.mse_comparison.col_labels.push_back(cr_source_label(cfg.gamma_sources[s]));

    out.predictor_mse.title = "empirical MSE per predictor";
    out.predictor_mse.row_header = "predictor";
    out.predictor_mse.col_labels.push_back("Empirical");

    for (std::size_t pr = 0; pr < n_pred; ++pr) {
        const std::string label = predictor_label(cfg.predictors[pr]);
        out.coverage.row_labels.push_back(label);
        out.mse_comparison.row_labels.push_back(label);
        out.predictor_mse.row_labels.push_back(label);

        std::vector<double> cov_row;
        for (std::size_t s = 0; s < n_src; ++s)
            for (std::size_t pi = 0; pi < n_p; ++pi)
                cov_row.push_back(report.coverage_at(pr, s, pi));
        out.coverage.cells.push_back(std::move(cov_row));

        std::vector<double> mse_row{report.empirical_mse_at(pr)};
        for (std::size_t s = 0; s < n_src; ++s)
            mse_row.push_back(report.est_mse_at(pr, s));
        out.mse_comparison.cells.push_back(std::move(mse_row));

        out.predictor_mse.cells.push_back({report.empirical_mse_at(pr)});
    }
    return out;
}

const char* predictor_label(PredictorId id) {
    switch (id) {
        case PredictorId::Pinv: return "Pinv";
        case PredictorId::Sub: return "Sub";
        case PredictorId::SMM: return "SMM";
        case PredictorId::WD: return "WD";
        case PredictorId::MseMb: return "MSE-MB";
        case PredictorId::MseSub: return "MSE-Sub";
        case PredictorId::MseSmm: return "MSE-SMM";
        case PredictorId::MseWd: return "MSE-WD";
    }
    return "?";
}

const char* predictor_token(PredictorId id) {
    switch (id) {
        case PredictorId::Pinv: return "pinv";
        case PredictorId::Sub: return "sub";
        case PredictorId::SMM: return "smm";
        case PredictorId::WD: return "wd";
        case PredictorId::MseMb: return "mse-mb";
        case PredictorId::MseSub: return "mse-sub";
        case PredictorId::MseSmm: return "mse-smm";
        case PredictorId::MseWd: return "mse-wd";
    }
    return "?";
}

const char* cr_source_label(CrSource src) {
    switch (src) {
        case CrSource::MB: return "CR-MB";
        case CrSource::Sub: return "CR-Sub";
        case CrSource::SMM: return "CR-SMM";
        case CrSource::WD: return "CR-WD";
    }
    return "?";
}

const char* cr_source_token(CrSource src) {
    switch (src) {
        case CrSource::MB: return "mb";
        case CrSource::Sub: return "sub";
        case CrSource::SMM: return "smm";
        case CrSource::WD: return "wd";
    }
    return "?";
}

bool predictor_from_token(const std::string& token, PredictorId& out) {
    for (PredictorId id :
         {PredictorId::Pinv, PredictorId::Sub, PredictorId::SMM, PredictorId::WD,
          PredictorId::MseMb, PredictorId::MseSub, PredictorId::MseSmm,
          PredictorId::MseWd}) {
        if (token == predictor_token(id)) {
            out = id;
            return true;
        }
    }
    return false;
}

bool cr_source_from_token(const std::string& token, CrSource& out) {
    for (CrSource src :
         {CrSource::MB, CrSource::Sub, CrSource::SMM, CrSource::WD}) {
        if (token == cr_source_token(src)) {
            out = src;
            return true;
        }
    }
    return false;
}

}  // namespace ddpred
