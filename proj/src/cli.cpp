#include "ddpred/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <json.hpp>

#include "ddpred/errors.hpp"
#include "ddpred/io.hpp"

namespace ddpred::cli {

namespace {

constexpr const char* kSynopsis = "run 'ddpred --help' for usage";

void parse_nx_range(const std::string& text, Index& lo, Index& hi) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            lo = hi = std::stol(text);
        } else {
            lo = std::stol(text.substr(0, dots));
            hi = std::stol(text.substr(dots + 2));
        }
    } catch (const std::exception&) {
        throw UsageError("--nx expects N or LO..HI, got '" + text + "'; " + kSynopsis);
    }
}

Vector to_vector(const std::vector<double>& values) {
    return Eigen::Map<const Vector>(values.data(), Index(values.size()));
}

struct PredictorSpec {
    PredictorKind kind;
    std::optional<GammaSource> source;
    bool needs_model = false;
};

PredictorSpec predictor_spec(const std::string& token,
                             const std::optional<StateSpaceModel>& model) {
    if (token == "pinv") return {PredictorKind::Pinv, std::nullopt, false};
    if (token == "sub") return {PredictorKind::Sub, std::nullopt, false};
    if (token == "smm") return {PredictorKind::SMM, std::nullopt, false};
    if (token == "wd") return {PredictorKind::WD, std::nullopt, false};
    if (token == "mse-mb") {
        if (!model) throw UsageError(std::string("--kind mse-mb requires --model; ") + kSynopsis);
        return {PredictorKind::MinMSE, GammaSource(ModelBasedGamma{*model}), true};
    }
    if (token == "mse-sub")
        return {PredictorKind::MinMSE, GammaSource(DataDrivenGamma{LambdaChoice::Sub}), false};
    if (token == "mse-smm")
        return {PredictorKind::MinMSE, GammaSource(DataDrivenGamma{LambdaChoice::SMM}), false};
    if (token == "mse-wd")
        return {PredictorKind::MinMSE, GammaSource(DataDrivenGamma{LambdaChoice::WD}), false};
    throw UsageError("unknown predictor kind '" + token + "'; " + kSynopsis);
}

int run_sysgen(const SysGenCmd& c) {
    Rng rng(c.seed);
    const StateSpaceModel model = random_system({c.nx_lo, c.nx_hi}, c.n_u, c.n_y, rng);
    io::write_model(c.out, model);
    return kExitOk;
}

int run_simulate(const SimulateCmd& c) {
    const StateSpaceModel model = io::read_model(c.model);
    Rng root(c.seed);
    Rng input_rng = root.split(0);
    Rng noise_rng = root.split(1);

    Matrix inputs;
    if (c.inputs) {
        inputs = io::read_inputs(*c.inputs);
        if (inputs.rows() != model.n_u())
            throw DimensionError("input file has " + std::to_string(inputs.rows()) +
                                 " channels, model expects " +
                                 std::to_string(model.n_u()));
    } else if (c.length) {
        inputs = linalg::random_gaussian(model.n_u(), *c.length, input_rng);
    } else {
        throw UsageError(std::string("simulate needs --inputs or --length; ") + kSynopsis);
    }

    std::optional<Matrix> noise;
    if (c.sigma2 > 0.0)
        noise = std::sqrt(c.sigma2) *
                linalg::random_gaussian(model.n_y(), inputs.cols(), noise_rng);
    const Trajectory traj =
        simulate(model, Vector::Zero(model.n_x()), inputs, noise);
    io::write_trajectory(c.out, traj);
    return kExitOk;
}

int run_predict(const PredictCmd& c) {
    const Trajectory traj = io::read_trajectory(c.data);
    const bool hankel = c.construction == "hankel";
    if (hankel && c.sigma2 > 0.0 && !c.allow_hankel_noise)
        throw UsageError(
            "hankel columns are correlated under noise; pass --allow-hankel-noise "
            "to proceed anyway (regions will not be calibrated)");
    const SignalMatrix sm = hankel ? build_hankel(traj, c.L, c.L0)
                                   : build_page(traj, c.L, c.L0);
    if (sm.discarded_samples() > 0)
        std::cerr << "note: discarded " << sm.discarded_samples()
                  << " trailing samples (T is not a multiple of L)\n";

    std::optional<StateSpaceModel> model;
    if (c.model) model = io::read_model(*c.model);
    const PredictorSpec spec = predictor_spec(c.kind, model);

    PredictionProblem prob{to_vector(c.u_ini), to_vector(c.y_ini), to_vector(c.u)};
    const NoiseModel noise = NoiseModel::iid(c.sigma2);
    GammaCache cache;
    const PredictionResult result =
        predict(sm, prob, spec.kind, noise, spec.source, &cache);

    nlohmann::json out;
    out["format_version"] = 1;
    out["kind"] = c.kind;
    auto to_json_array = [](const Vector& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
        return arr;
    };
    out["y"] = to_json_array(result.y);
    out["g"] = to_json_array(result.g);
    out["delta"] = to_json_array(result.delta);
    out["lambda"] = result.lambda;
    out["region"] = nullptr;

    if (c.sigma2 > 0.0) {
        Matrix gamma;
        CrSource src;
        if (!cr_source_from_token(c.cr, src))
            throw UsageError("unknown --cr source '" + c.cr + "'; " + kSynopsis);
        if (src == CrSource::MB) {
            if (!model) throw UsageError(std::string("--cr mb requires --model; ") + kSynopsis);
            gamma = gamma_model_based(*model, sm.L0(), sm.Lp());
        } else {
            const LambdaChoice choice = src == CrSource::Sub ? LambdaChoice::Sub
                                        : src == CrSource::SMM ? LambdaChoice::SMM
                                                               : LambdaChoice::WD;
            gamma = cache.get(sm, choice, c.sigma2);
        }
        const DofPolicy policy =
            c.dof == "horizon" ? DofPolicy::Horizon : DofPolicy::FullOutput;
        const ConfidenceRegion region =
            confidence_region(result, gamma, noise, c.p, policy, sm.n_y());

        io::RegionFile rf;
        rf.center = region.center();
        rf.sigma = region.sigma();
        rf.mu_p = region.mu_p();
        rf.p = region.p();
        rf.dof = region.dof();
        if (c.boundary > 0) {
            if (region.dim() != 2)
                throw NotTwoDimensional("--boundary requires a 2-D region (n_y * Lp = 2)");
            rf.boundary = ellipse_boundary(region, c.boundary);
        }
        nlohmann::json rj;
        rj["center"] = to_json_array(rf.center);
        nlohmann::json sigma_rows = nlohmann::json::array();
        for (Index i = 0; i < rf.sigma.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Index j = 0; j < rf.sigma.cols(); ++j) row.push_back(rf.sigma(i, j));
            sigma_rows.push_back(std::move(row));
        }
        rj["sigma"] = std::move(sigma_rows);
        rj["mu_p"] = rf.mu_p;
        rj["p"] = rf.p;
        rj["dof"] = rf.dof;
        if (rf.boundary) {
            nlohmann::json boundary = nlohmann::json::array();
            for (const auto& pt : *rf.boundary)
                boundary.push_back(nlohmann::json::array({pt.x(), pt.y()}));
            rj["boundary"] = std::move(boundary);
        }
        out["region"] = std::move(rj);
        if (c.region_out) io::write_region(*c.region_out, rf);
    } else if (c.region_out) {
        throw UsageError(std::string("--region-out requires --sigma2 > 0 "
                                     "(zero-noise regions are degenerate); ") + kSynopsis);
    }

    io::atomic_write(c.out, out.dump(2) + "\n");
    return kExitOk;
}

int run_campaign_cmd(const CampaignCmd& c) {
    const CampaignConfig config = io::read_campaign_config(c.config);
    const CampaignReport report = run_campaign(config);
    io::write_campaign_outputs(c.out_dir, report);
    for (const char* name :
         {"coverage.csv", "mse_comparison.csv", "predictor_mse.csv", "manifest.json"})
        std::cout << "wrote " << (std::filesystem::path(c.out_dir) / name).string()
                  << "\n";
    return kExitOk;
}

int run_ellipse(const EllipseCmd& c) {
    io::RegionFile rf = io::read_region(c.region);
    ConfidenceRegion region(rf.center, rf.sigma, rf.p, rf.dof);
    rf.mu_p = region.mu_p();
    rf.boundary = ellipse_boundary(region, c.n_points);
    io::write_region(c.out, rf);
    return kExitOk;
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
    CLI::App app{"ddpred: data-driven output prediction for LTI systems"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 success, 2 usage error, 3 i/o error, 4 file format error,\n"
        "5 domain error (singular data, unstable system, ...).");

    SysGenCmd sysgen;
    std::string nx_text = "3..8";
    auto* sysgen_app = app.add_subcommand(
        "sysgen", "Generate a random observable stable model with unit H2 gain");
    sysgen_app->add_option("--out", sysgen.out, "output model JSON")->required();
    sysgen_app->add_option("--nx", nx_text, "state dimension N or range LO..HI");
    sysgen_app->add_option("--nu", sysgen.n_u, "input channels")
        ->check(CLI::PositiveNumber);
    sysgen_app->add_option("--ny", sysgen.n_y, "output channels")
        ->check(CLI::PositiveNumber);
    sysgen_app->add_option("--seed", sysgen.seed, "random seed");

    SimulateCmd simulate;
    auto* simulate_app = app.add_subcommand(
        "simulate", "Simulate a model from rest and write the trajectory CSV");
    simulate_app->add_option("--model", simulate.model, "model JSON")->required();
    simulate_app->add_option("--inputs", simulate.inputs, "input CSV (t,u1,..)");
    simulate_app->add_option("--length", simulate.length,
                             "draw this many unit-Gaussian input samples")
        ->check(CLI::PositiveNumber);
    simulate_app->add_option("--sigma2", simulate.sigma2, "output noise variance")
        ->check(CLI::NonNegativeNumber);
    simulate_app->add_option("--seed", simulate.seed, "random seed");
    simulate_app->add_option("--out", simulate.out, "output trajectory CSV")->required();

    PredictCmd predict;
    auto* predict_app = app.add_subcommand(
        "predict", "Predict future outputs from a data trajectory");
    predict_app->add_option("--data", predict.data, "data trajectory CSV")->required();
    predict_app->add_option("--L", predict.L, "window length")->required();
    predict_app->add_option("--L0", predict.L0, "past window length")->required();
    predict_app->add_option("--construction", predict.construction, "page | hankel")
        ->check(CLI::IsMember({"page", "hankel"}));
    predict_app->add_flag("--allow-hankel-noise", predict.allow_hankel_noise,
                          "pair a hankel matrix with noisy data anyway");
    predict_app
        ->add_option("--kind", predict.kind,
                     "predictor: pinv|sub|smm|wd|mse-mb|mse-sub|mse-smm|mse-wd")
        ->required()
        ->check(CLI::IsMember({"pinv", "sub", "smm", "wd", "mse-mb", "mse-sub",
                               "mse-smm", "mse-wd"}));
    predict_app->add_option("--cr", predict.cr, "region gamma source: mb|sub|smm|wd")
        ->check(CLI::IsMember({"mb", "sub", "smm", "wd"}));
    predict_app->add_option("--model", predict.model,
                            "model JSON (needed by mse-mb / --cr mb)");
    predict_app->add_option("--sigma2", predict.sigma2, "output noise variance")
        ->check(CLI::NonNegativeNumber);
    predict_app->add_option("--u-ini", predict.u_ini, "past inputs, comma separated")
        ->required()
        ->delimiter(',');
    predict_app->add_option("--y-ini", predict.y_ini, "past outputs, comma separated")
        ->required()
        ->delimiter(',');
    predict_app->add_option("--u", predict.u, "future inputs, comma separated")
        ->required()
        ->delimiter(',');
    predict_app->add_option("--p", predict.p, "confidence level in (0,1)");
    predict_app->add_option("--dof", predict.dof, "chi2 dof policy: full | horizon")
        ->check(CLI::IsMember({"full", "horizon"}));
    predict_app->add_option("--boundary", predict.boundary,
                            "emit this many 2-D boundary samples");
    predict_app->add_option("--out", predict.out, "output prediction JSON")->required();
    predict_app->add_option("--region-out", predict.region_out,
                            "also write a standalone region JSON");

    CampaignCmd campaign;
    auto* campaign_app = app.add_subcommand(
        "campaign", "Run a Monte Carlo campaign and write report CSVs");
    campaign_app->add_option("--config", campaign.config, "campaign config JSON")
        ->required();
    campaign_app->add_option("--out", campaign.out_dir, "output directory")->required();

    EllipseCmd ellipse;
    auto* ellipse_app = app.add_subcommand(
        "ellipse", "Sample the boundary of a 2-D region file");
    ellipse_app->add_option("--region", ellipse.region, "region JSON")->required();
    ellipse_app->add_option("--n", ellipse.n_points, "number of boundary points")
        ->check(CLI::PositiveNumber);
    ellipse_app->add_option("--out", ellipse.out, "output region JSON with boundary")
        ->required();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("ddpred");
    for (const auto& arg : args) argv.push_back(arg.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        throw HelpRequested{subs.empty() ? app.help() : subs.front()->help()};
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw UsageError(std::string(e.what()) + "; " + kSynopsis);
    }

    if (sysgen_app->parsed()) {
        parse_nx_range(nx_text, sysgen.nx_lo, sysgen.nx_hi);
        return sysgen;
    }
    if (simulate_app->parsed()) return simulate;
    if (predict_app->parsed()) return predict;
    if (campaign_app->parsed()) return campaign;
    return ellipse;
}

int run(const Command& command) {
    return std::visit(
        [](const auto& cmd) -> int {
            using T = std::decay_t<decltype(cmd)>;
            if constexpr (std::is_same_v<T, SysGenCmd>) return run_sysgen(cmd);
            if constexpr (std::is_same_v<T, SimulateCmd>) return run_simulate(cmd);
            if constexpr (std::is_same_v<T, PredictCmd>) return run_predict(cmd);
            if constexpr (std::is_same_v<T, CampaignCmd>) return run_campaign_cmd(cmd);
            if constexpr (std::is_same_v<T, EllipseCmd>) return run_ellipse(cmd);
        },
        command);
}

namespace {

std::string one_line(std::string text) {
    for (char& c : text)
        if (c == '\n' || c == '\r') c = ' ';
    return text;
}

}  // namespace

int main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        return run(parse_args(args));
    } catch (const HelpRequested& help) {
        std::cout << help.text;
        return kExitOk;
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "error: format: " << one_line(e.what()) << "\n";
        return kExitFormat;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << one_line(e.what()) << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: domain: " << one_line(e.what()) << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << one_line(e.what()) << "\n";
        return 1;
    }
}

}  // namespace ddpred::cli
