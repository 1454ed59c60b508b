/// @file runner.hpp
/// @brief Config parsing, preset initial data, experiment orchestration, and
///        the reproducible output layout shared by all CLI subcommands.

#pragma once

#include <string>
#include <vector>

#include "mixopt/grid.hpp"
#include "mixopt/optimizer.hpp"

namespace mixopt {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes shared by the runner and the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitInvalidConfig = 2,
    kExitNotConverged = 3,
    kExitRuntimeFailure = 4,
};

/** Every knob that affects numerics, with the reference defaults: tau = 0.005,
 *  t_f = 1, r = 0.3, lambda0 = 1, eps1 = 5e-4, eps2 = 1e-3, basis {1,2},
 *  tanh-stripe datum, snapshots at {0, 0.2, 0.4, 0.6, 0.8, 1}. */
struct RunConfig {
    int n = 129;
    double tau = 0.005;
    double t_f = 1.0;
    double r = 0.3;
    double lambda0 = 1.0;
    double alpha0 = 0.6;
    double eps1 = 5e-4;
    double eps2 = 1e-3;
    int max_iter = 200;
    std::vector<int> basis{1, 2};
    bool scaled = false;
    std::string theta0 = "tanh-stripe";
    std::string outdir = "out";
    std::vector<double> snapshot_times{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::string adjoint_scheme = "transpose";   ///< transpose | explicit
    std::string p_assembly = "exact";           ///< exact | quadrature
    std::string source_form = "square-of-sum";  ///< square-of-sum | sum-of-squares
    std::vector<double> u0;                     ///< initial control; empty = default profile
    double cg_tol = 1e-12;
    int cg_max_iter = 500;
    std::vector<int> mixrate_N{2, 3, 4};
    std::string mixrate_theta0 = "cosine-y";
    int jobs = 1;
    std::string controls_file;                  ///< simulate: replay this controls table
    std::string field_file;                     ///< mixnorm: snapshot to evaluate
    double feas_eps = 1.0 / 6.0;
    double feas_c2 = 0.0;
    double feas_normh1 = 0.0;                   ///< 0 = derive from the datum
    double feas_normdual = 0.0;
    double calibrate_ratio = 0.0;               ///< >0: back-solve c2 from this measured ratio
    int calibrate_N = 0;
    int period_N = 1;
    double period_I = 0.25;
};

/// Config-file or validation failure carrying every diagnostic found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

/** Parse `key = value` lines ('#' starts a comment). Unknown keys and
 *  malformed values are collected with their line numbers and reported
 *  together; the result is validated. */
RunConfig load_config(const std::string& path);

/// Parse one key=value pair into the config (same table as the file loader).
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value, std::vector<std::string>& issues);

/// Check every invariant; throws ConfigError listing all violations.
void validate(const RunConfig& cfg);

/** Built-in initial data: tanh-stripe = tanh((2 x2 - 1)/0.2) + 1 (bicolor
 *  stripe), sine-stripe = sin(2 pi x2) + 1, cosine-x = cos(pi x1) and
 *  cosine-y = cos(pi x2) (single-mode test data). Unknown names raise an
 *  error that lists the choices. */
ScalarField preset_theta0(const std::string& name, Grid2D grid);

/// Subcommand drivers; each returns a process exit code and writes its
/// artifacts under cfg.outdir.
int run_optimize(const RunConfig& cfg);
int run_simulate(const RunConfig& cfg);
int run_mixnorm(const RunConfig& cfg);
int run_mixrate(const RunConfig& cfg);
int run_feasibility(const RunConfig& cfg);
int run_period(const RunConfig& cfg);

} // namespace mixopt
