#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ddpred/montecarlo.hpp"

namespace ddpred::io {

/// Shortest decimal encoding that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Writes to a sibling temp file, then renames over the target.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Git-style content hash: SHA-1 over "blob <size>\0<content>".
std::string sha1_blob_hex(std::string_view content);

// Model files: JSON with n_x/n_u/n_y and row-major nested matrices.
StateSpaceModel read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const StateSpaceModel& model);

// Trajectory files: CSV, "# format=1" comment, header t,u1..,y1..,
// one row per step with t ascending from 0.
Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);

/// Input-only CSV (header t,u1..): returns inputs one column per step.
Matrix read_inputs(const std::filesystem::path& path);
void write_inputs(const std::filesystem::path& path, const Matrix& inputs);

/// On-disk confidence region: the ellipsoid parameters plus an optional
/// sampled boundary for 2-D regions.
struct RegionFile {
    Vector center;
    Matrix sigma;
    double mu_p = 0.0;
    double p = 0.0;
    int dof = 0;
    std::optional<std::vector<Eigen::Vector2d>> boundary;
};

RegionFile read_region(const std::filesystem::path& path);
void write_region(const std::filesystem::path& path, const RegionFile& region);

CampaignConfig read_campaign_config(const std::filesystem::path& path);
std::string campaign_config_json(const CampaignConfig& config);

void write_table_csv(const std::filesystem::path& path, const SummaryTable& table);

/// Writes coverage.csv, mse_comparison.csv, predictor_mse.csv, and
/// manifest.json (config echo, seed, config content hash) into dir.
void write_campaign_outputs(const std::filesystem::path& dir,
                            const CampaignReport& report);

}  // namespace ddpred::io
