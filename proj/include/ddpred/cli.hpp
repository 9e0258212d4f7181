#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ddpred/linalg.hpp"

namespace ddpred::cli {

struct SysGenCmd {
    std::string out;
    Index nx_lo = 3;
    Index nx_hi = 8;
    Index n_u = 1;
    Index n_y = 1;
    std::uint64_t seed = 0;
};

struct SimulateCmd {
    std::string model;
    std::optional<std::string> inputs;  // input CSV, or
    std::optional<Index> length;        // unit-Gaussian inputs of this length
    double sigma2 = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

struct PredictCmd {
    std::string data;  // trajectory CSV
    Index L = 0;
    Index L0 = 0;
    std::string construction = "page";
    bool allow_hankel_noise = false;
    std::string kind;       // pinv|sub|smm|wd|mse-mb|mse-sub|mse-smm|mse-wd
    std::string cr = "smm";  // region source: mb|sub|smm|wd
    std::optional<std::string> model;  // required by mse-mb / --cr mb
    double sigma2 = 0.0;
    std::vector<double> u_ini, y_ini, u;
    double p = 0.9;
    std::string dof = "full";  // full | horizon
    int boundary = 0;          // boundary samples for 2-D regions, 0 = none
    std::string out;
    std::optional<std::string> region_out;  // standalone region file
};

struct CampaignCmd {
    std::string config;
    std::string out_dir;
};

struct EllipseCmd {
    std::string region;
    int n_points = 128;
    std::string out;
};

using Command =
    std::variant<SysGenCmd, SimulateCmd, PredictCmd, CampaignCmd, EllipseCmd>;

/// Thrown when the user asked for --help; carries the text to print.
struct HelpRequested {
    std::string text;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitFormat = 4;
inline constexpr int kExitDomain = 5;

/// Parses the argument list (without the program name) into a validated
/// command. Unknown flags and bad values raise UsageError; --help raises
/// HelpRequested.
Command parse_args(const std::vector<std::string>& args);

/// Executes a parsed command; returns an exit status (0 on success) and
/// throws library/io errors otherwise.
int run(const Command& command);

/// Full front end: parse, run, and map every failure to a documented exit
/// code with a single-line diagnostic on stderr.
int main(int argc, const char* const* argv);

}  // namespace ddpred::cli
