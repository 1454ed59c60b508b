// Command-line front end: subcommands wrap the library drivers; every
// configuration key is reachable both from a key=value file (--config) and
// from a flag of the same name, with flags taking precedence.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mixopt/runner.hpp"

namespace {

struct CliInput {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_key_option(CLI::App* cmd, CliInput& in, const std::string& key, const std::string& desc) {
    cmd->add_option_function<std::string>(
        "--" + key, [&in, key](const std::string& v) { in.overrides.emplace_back(key, v); }, desc);
}

void add_common(CLI::App* cmd, CliInput& in) {
    cmd->add_option("--config", in.config_path, "key = value settings file; flags override it");
    add_key_option(cmd, in, "n", "nodes per side of the grid");
    add_key_option(cmd, in, "tau", "time step");
    add_key_option(cmd, in, "tf", "final time");
    add_key_option(cmd, in, "outdir", "output directory");
    add_key_option(cmd, in, "cg_tol", "inner linear-solver tolerance");
    add_key_option(cmd, in, "cg_max_iter", "inner linear-solver iteration cap");
    add_key_option(cmd, in, "scaled", "use amplitude-scaled stirring fields");
}

void add_flow_options(CLI::App* cmd, CliInput& in) {
    add_key_option(cmd, in, "basis", "comma list of cellular frequencies");
    add_key_option(cmd, in, "theta0", "initial datum preset");
    add_key_option(cmd, in, "u0", "comma list of initial control coefficients");
    add_key_option(cmd, in, "snapshot_times", "comma list of times to dump fields at");
    add_key_option(cmd, in, "source_form", "adjoint kinetic source: square-of-sum | sum-of-squares");
}

mixopt::RunConfig resolve(const CliInput& in) {
    mixopt::RunConfig cfg;
    if (!in.config_path.empty()) cfg = mixopt::load_config(in.config_path);
    std::vector<std::string> issues;
    for (const auto& [key, value] : in.overrides) mixopt::apply_key(cfg, key, value, issues);
    if (!issues.empty()) throw mixopt::ConfigError(std::move(issues));
    mixopt::validate(cfg);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-minimal stirring of a passive scalar by cellular flows"};
    app.set_version_flag("--version", mixopt::kVersion);
    app.require_subcommand(1);

    CliInput in;

    CLI::App* opt = app.add_subcommand("optimize", "run the fixed-point control optimization");
    add_common(opt, in);
    add_flow_options(opt, in);
    add_key_option(opt, in, "r", "target mix-norm ratio in (0,1)");
    add_key_option(opt, in, "lambda0", "initial constraint multiplier");
    add_key_option(opt, in, "alpha0", "initial control relaxation factor");
    add_key_option(opt, in, "eps1", "constraint-violation tolerance");
    add_key_option(opt, in, "eps2", "relative cost-change tolerance");
    add_key_option(opt, in, "max_iter", "outer iteration cap");
    add_key_option(opt, in, "adjoint_scheme", "backward sweep: transpose | explicit");
    add_key_option(opt, in, "p_assembly", "gradient projection: exact | quadrature");

    CLI::App* sim = app.add_subcommand("simulate", "advect the datum under a fixed control");
    add_common(sim, in);
    add_flow_options(sim, in);
    add_key_option(sim, in, "controls_file", "replay this controls table instead of a constant profile");
    sim->add_option_function<std::string>(
        "--controls", [&in](const std::string& v) { in.overrides.emplace_back("controls_file", v); },
        "alias for --controls_file");

    CLI::App* mn = app.add_subcommand("mixnorm", "evaluate the mix-norm of a stored field");
    add_key_option(mn, in, "field_file", "snapshot file to evaluate");
    mn->add_option_function<std::string>(
        "--field", [&in](const std::string& v) { in.overrides.emplace_back("field_file", v); },
        "alias for --field_file");

    CLI::App* mr = app.add_subcommand("mixrate", "measure mix-norm decay under steady stirring");
    add_common(mr, in);
    add_key_option(mr, in, "mixrate_N", "comma list of frequencies to sweep");
    add_key_option(mr, in, "mixrate_theta0", "initial datum preset for the sweep");
    add_key_option(mr, in, "jobs", "concurrent per-frequency solves");

    CLI::App* fe = app.add_subcommand("feasibility", "frequency needed to reach the mixing target");
    add_common(fe, in);
    add_key_option(fe, in, "theta0", "datum whose norms seed the estimate");
    add_key_option(fe, in, "r", "target mix-norm ratio in (0,1)");
    add_key_option(fe, in, "feas_eps", "rate-loss parameter in (0, 1/3)");
    add_key_option(fe, in, "feas_c2", "decay-rate constant");
    add_key_option(fe, in, "feas_normh1", "override the H1 size of the datum");
    add_key_option(fe, in, "feas_normdual", "override its mix-norm size");
    add_key_option(fe, in, "calibrate_ratio", "back-solve the constant from this measured ratio");
    add_key_option(fe, in, "calibrate_N", "frequency of the calibration run");
    fe->add_option_function<std::string>(
        "--c2", [&in](const std::string& v) { in.overrides.emplace_back("feas_c2", v); },
        "alias for --feas_c2");

    CLI::App* pe = app.add_subcommand("period", "closed-orbit period of one cellular cell");
    add_key_option(pe, in, "period_N", "cellular frequency");
    add_key_option(pe, in, "period_I", "stream-function level in (0, 1/(2N))");
    add_key_option(pe, in, "scaled", "report the period of the amplitude-scaled flow");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? mixopt::kExitOk : mixopt::kExitInvalidConfig;
    }

    try {
        const mixopt::RunConfig cfg = resolve(in);
        if (opt->parsed()) return mixopt::run_optimize(cfg);
        if (sim->parsed()) return mixopt::run_simulate(cfg);
        if (mn->parsed()) return mixopt::run_mixnorm(cfg);
        if (mr->parsed()) return mixopt::run_mixrate(cfg);
        if (fe->parsed()) return mixopt::run_feasibility(cfg);
        if (pe->parsed()) return mixopt::run_period(cfg);
        std::fprintf(stderr, "no subcommand selected\n");
        return mixopt::kExitInvalidConfig;
    } catch (const mixopt::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return mixopt::kExitInvalidConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return mixopt::kExitRuntimeFailure;
    }
}
