#include "mixopt/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mixopt/mixnorm.hpp"
#include "mixopt/transport.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mixopt {

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_real(const std::string& v, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(v, &pos);
        return pos == v.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

bool parse_int(const std::string& v, int& out) {
    try {
        size_t pos = 0;
        out = std::stoi(v, &pos);
        return pos == v.size();
    } catch (...) {
        return false;
    }
}

bool parse_bool(const std::string& v, bool& out) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") { out = true; return true; }
    if (v == "0" || v == "false" || v == "no" || v == "off") { out = false; return true; }
    return false;
}

template <typename T, typename Parse>
bool parse_list(const std::string& v, std::vector<T>& out, Parse parse) {
    std::vector<T> items;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) return false;
        T x;
        if (!parse(tok, x)) return false;
        items.push_back(x);
    }
    if (items.empty()) return false;
    out = std::move(items);
    return true;
}

const std::vector<std::string> kPresetNames = {"tanh-stripe", "sine-stripe", "cosine-x", "cosine-y"};

} // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error("invalid configuration:\n  " + join(issues, "\n  ")), issues_(std::move(issues)) {}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value,
               std::vector<std::string>& issues) {
    auto bad = [&](const char* what) { issues.push_back("key '" + key + "': expected " + what + ", got '" + value + "'"); };
    using Handler = std::function<void()>;
    const std::map<std::string, Handler> handlers = {
        {"n", [&] { if (!parse_int(value, cfg.n)) bad("an integer"); }},
        {"tau", [&] { if (!parse_real(value, cfg.tau)) bad("a real"); }},
        {"tf", [&] { if (!parse_real(value, cfg.t_f)) bad("a real"); }},
        {"r", [&] { if (!parse_real(value, cfg.r)) bad("a real"); }},
        {"lambda0", [&] { if (!parse_real(value, cfg.lambda0)) bad("a real"); }},
        {"alpha0", [&] { if (!parse_real(value, cfg.alpha0)) bad("a real"); }},
        {"eps1", [&] { if (!parse_real(value, cfg.eps1)) bad("a real"); }},
        {"eps2", [&] { if (!parse_real(value, cfg.eps2)) bad("a real"); }},
        {"max_iter", [&] { if (!parse_int(value, cfg.max_iter)) bad("an integer"); }},
        {"basis", [&] { if (!parse_list(value, cfg.basis, parse_int)) bad("a comma list of integers"); }},
        {"scaled", [&] { if (!parse_bool(value, cfg.scaled)) bad("a boolean"); }},
        {"theta0", [&] { cfg.theta0 = value; }},
        {"outdir", [&] { cfg.outdir = value; }},
        {"snapshot_times", [&] { if (!parse_list(value, cfg.snapshot_times, parse_real)) bad("a comma list of reals"); }},
        {"adjoint_scheme", [&] { cfg.adjoint_scheme = value; }},
        {"p_assembly", [&] { cfg.p_assembly = value; }},
        {"source_form", [&] { cfg.source_form = value; }},
        {"u0", [&] { if (!parse_list(value, cfg.u0, parse_real)) bad("a comma list of reals"); }},
        {"cg_tol", [&] { if (!parse_real(value, cfg.cg_tol)) bad("a real"); }},
        {"cg_max_iter", [&] { if (!parse_int(value, cfg.cg_max_iter)) bad("an integer"); }},
        {"mixrate_N", [&] { if (!parse_list(value, cfg.mixrate_N, parse_int)) bad("a comma list of integers"); }},
        {"mixrate_theta0", [&] { cfg.mixrate_theta0 = value; }},
        {"jobs", [&] { if (!parse_int(value, cfg.jobs)) bad("an integer"); }},
        {"controls_file", [&] { cfg.controls_file = value; }},
        {"field_file", [&] { cfg.field_file = value; }},
        {"feas_eps", [&] { if (!parse_real(value, cfg.feas_eps)) bad("a real"); }},
        {"feas_c2", [&] { if (!parse_real(value, cfg.feas_c2)) bad("a real"); }},
        {"feas_normh1", [&] { if (!parse_real(value, cfg.feas_normh1)) bad("a real"); }},
        {"feas_normdual", [&] { if (!parse_real(value, cfg.feas_normdual)) bad("a real"); }},
        {"calibrate_ratio", [&] { if (!parse_real(value, cfg.calibrate_ratio)) bad("a real"); }},
        {"calibrate_N", [&] { if (!parse_int(value, cfg.calibrate_N)) bad("an integer"); }},
        {"period_N", [&] { if (!parse_int(value, cfg.period_N)) bad("an integer"); }},
        {"period_I", [&] { if (!parse_real(value, cfg.period_I)) bad("a real"); }},
    };
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
        issues.push_back("unknown key '" + key + "'");
        return;
    }
    it->second();
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    RunConfig cfg;
    std::vector<std::string> issues;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back("line " + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            issues.push_back("line " + std::to_string(lineno) + ": empty key or value");
            continue;
        }
        const size_t before = issues.size();
        apply_key(cfg, key, value, issues);
        for (size_t i = before; i < issues.size(); ++i)
            issues[i] = "line " + std::to_string(lineno) + ": " + issues[i];
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    validate(cfg);
    return cfg;
}

void validate(const RunConfig& cfg) {
    std::vector<std::string> issues;
    auto check = [&](bool ok, const std::string& msg) { if (!ok) issues.push_back(msg); };

    check(cfg.n >= 8, "n must be at least 8 (got " + std::to_string(cfg.n) + ")");
    check(cfg.tau > 0.0, "tau must be positive");
    check(cfg.t_f > 0.0, "tf must be positive");
    if (cfg.tau > 0.0 && cfg.t_f > 0.0) {
        const double steps = cfg.t_f / cfg.tau;
        check(std::abs(steps - std::llround(steps)) <= 1e-9 * steps && steps >= 0.5,
              "tau must divide tf into whole steps (tf/tau = " + std::to_string(steps) + ")");
    }
    check(cfg.r > 0.0 && cfg.r < 1.0, "r must lie in (0,1) (got " + std::to_string(cfg.r) + ")");
    check(cfg.lambda0 >= 0.0, "lambda0 must be nonnegative");
    check(cfg.alpha0 > 0.0 && cfg.alpha0 <= 1.0, "alpha0 must lie in (0,1]");
    check(cfg.eps1 > 0.0, "eps1 must be positive");
    check(cfg.eps2 > 0.0, "eps2 must be positive");
    check(cfg.max_iter >= 1, "max_iter must be at least 1");

    check(!cfg.basis.empty(), "basis must list at least one frequency");
    std::set<int> seen;
    for (int i : cfg.basis) {
        check(i >= 1, "basis frequencies must be positive (got " + std::to_string(i) + ")");
        check(seen.insert(i).second, "basis frequency " + std::to_string(i) + " repeats");
    }
    check(std::find(kPresetNames.begin(), kPresetNames.end(), cfg.theta0) != kPresetNames.end(),
          "theta0 '" + cfg.theta0 + "' is not a preset (choose from " + join(kPresetNames, ", ") + ")");
    check(std::find(kPresetNames.begin(), kPresetNames.end(), cfg.mixrate_theta0) != kPresetNames.end(),
          "mixrate_theta0 '" + cfg.mixrate_theta0 + "' is not a preset (choose from " + join(kPresetNames, ", ") + ")");
    check(cfg.adjoint_scheme == "transpose" || cfg.adjoint_scheme == "explicit",
          "adjoint_scheme must be 'transpose' or 'explicit'");
    check(cfg.p_assembly == "exact" || cfg.p_assembly == "quadrature",
          "p_assembly must be 'exact' or 'quadrature'");
    check(cfg.source_form == "square-of-sum" || cfg.source_form == "sum-of-squares",
          "source_form must be 'square-of-sum' or 'sum-of-squares'");
    check(cfg.u0.empty() || cfg.u0.size() == cfg.basis.size(),
          "u0 must have one entry per basis frequency");

    for (double t : cfg.snapshot_times) {
        check(t >= -1e-12 && t <= cfg.t_f + 1e-12,
              "snapshot time " + std::to_string(t) + " lies outside [0, tf]");
        if (cfg.tau > 0.0) {
            const double k = t / cfg.tau;
            check(std::abs(k - std::llround(k)) <= 1e-6,
                  "snapshot time " + std::to_string(t) + " is not a whole number of steps");
        }
    }

    check(cfg.cg_tol > 0.0, "cg_tol must be positive");
    check(cfg.cg_max_iter >= 1, "cg_max_iter must be at least 1");
    check(cfg.jobs >= 1, "jobs must be at least 1");

    check(!cfg.mixrate_N.empty(), "mixrate_N must list at least one frequency");
    std::set<int> seenN;
    for (int i : cfg.mixrate_N) {
        check(i >= 1, "mixrate frequencies must be positive");
        check(seenN.insert(i).second, "mixrate frequency " + std::to_string(i) + " repeats");
    }

    check(cfg.feas_eps > 0.0 && cfg.feas_eps < 1.0 / 3.0, "feas_eps must lie in (0, 1/3)");
    check(cfg.period_N >= 1, "period_N must be positive");
    check(cfg.period_I > 0.0 && cfg.period_I < 0.5 / std::max(cfg.period_N, 1),
          "period_I must lie in (0, 1/(2N))");

    if (!issues.empty()) throw ConfigError(std::move(issues));
}

ScalarField preset_theta0(const std::string& name, Grid2D grid) {
    if (name == "tanh-stripe")
        return sample(grid, [](double, double x2) { return std::tanh((2.0 * x2 - 1.0) / 0.2) + 1.0; });
    if (name == "sine-stripe")
        return sample(grid, [](double, double x2) { return std::sin(2.0 * M_PI * x2) + 1.0; });
    if (name == "cosine-x")
        return sample(grid, [](double x1, double) { return std::cos(M_PI * x1); });
    if (name == "cosine-y")
        return sample(grid, [](double, double x2) { return std::cos(M_PI * x2); });
    throw ConfigError({"unknown initial datum '" + name + "' (choose from " + join(kPresetNames, ", ") + ")"});
}

namespace {

class CsvFile {
public:
    explicit CsvFile(const fs::path& path) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        fp_ = std::fopen(path.string().c_str(), "w");
        if (!fp_) throw std::runtime_error("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
    }
    ~CsvFile() { if (fp_) std::fclose(fp_); }
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    void header(const std::vector<std::string>& cols) { line_str(cols); }
    void line_str(const std::vector<std::string>& cols) {
        for (size_t i = 0; i < cols.size(); ++i) std::fprintf(fp_, i ? ",%s" : "%s", cols[i].c_str());
        std::fputc('\n', fp_);
    }
    void begin_row() { first_ = true; }
    void cell_int(long long v) { std::fprintf(fp_, first_ ? "%lld" : ",%lld", v); first_ = false; }
    void cell(double v) { std::fprintf(fp_, first_ ? "%.17g" : ",%.17g", v); first_ = false; }
    void end_row() { std::fputc('\n', fp_); }

private:
    std::FILE* fp_ = nullptr;
    bool first_ = true;
};

std::string format_time_label(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

json config_json(const RunConfig& c) {
    return json{
        {"n", c.n}, {"tau", c.tau}, {"tf", c.t_f}, {"r", c.r},
        {"lambda0", c.lambda0}, {"alpha0", c.alpha0}, {"eps1", c.eps1}, {"eps2", c.eps2},
        {"max_iter", c.max_iter}, {"basis", c.basis}, {"scaled", c.scaled}, {"theta0", c.theta0},
        {"outdir", c.outdir}, {"snapshot_times", c.snapshot_times},
        {"adjoint_scheme", c.adjoint_scheme}, {"p_assembly", c.p_assembly}, {"source_form", c.source_form},
        {"u0", c.u0}, {"cg_tol", c.cg_tol}, {"cg_max_iter", c.cg_max_iter},
        {"mixrate_N", c.mixrate_N}, {"mixrate_theta0", c.mixrate_theta0}, {"jobs", c.jobs},
        {"controls_file", c.controls_file}, {"field_file", c.field_file},
        {"feas_eps", c.feas_eps}, {"feas_c2", c.feas_c2},
        {"feas_normh1", c.feas_normh1}, {"feas_normdual", c.feas_normdual},
        {"calibrate_ratio", c.calibrate_ratio}, {"calibrate_N", c.calibrate_N},
        {"period_N", c.period_N}, {"period_I", c.period_I},
    };
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand, double wall_seconds,
                    const json& outcome) {
    json m{
        {"subcommand", subcommand},
        {"version", kVersion},
        {"wall_time_s", wall_seconds},
        {"config", config_json(cfg)},
        {"outcome", outcome},
    };
    const fs::path path = fs::path(cfg.outdir) / "manifest.json";
    fs::create_directories(cfg.outdir);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << m.dump(2) << "\n";
}

void write_controls_csv(const RunConfig& cfg, const ControlTrajectory& u, const std::vector<int>& indices) {
    CsvFile f(fs::path(cfg.outdir) / "controls.csv");
    std::vector<std::string> cols{"time"};
    for (int i : indices) cols.push_back("u" + std::to_string(i));
    f.header(cols);
    for (int k = 0; k < u.steps(); ++k) {
        f.begin_row();
        f.cell(k * u.tau());
        for (int s = 0; s < u.count(); ++s) f.cell(u.at(s, k));
        f.end_row();
    }
}

void write_mixnorm_csv(const RunConfig& cfg, const TrajectoryRecord& rec) {
    CsvFile f(fs::path(cfg.outdir) / "mixnorm.csv");
    f.header({"step", "time", "mixnorm_sq", "cost_cum"});
    for (size_t k = 0; k < rec.mixnorm_sq.size(); ++k) {
        f.begin_row();
        f.cell_int(static_cast<long long>(k));
        f.cell(static_cast<double>(k) * rec.tau);
        f.cell(rec.mixnorm_sq[k]);
        f.cell(k == 0 ? 0.0 : rec.cost_cum[k - 1]);
        f.end_row();
    }
}

void write_snapshots(const RunConfig& cfg, const TrajectoryRecord& rec) {
    for (double t : cfg.snapshot_times) {
        const long long k = std::llround(t / rec.tau);
        if (k < 0 || k >= static_cast<long long>(rec.theta.size())) continue;
        const fs::path path = fs::path(cfg.outdir) / "snapshots" / ("t_" + format_time_label(t) + ".csv");
        write_snapshot(path.string(), rec.theta[static_cast<size_t>(k)], t, "theta");
    }
}

struct LoadedControls {
    ControlTrajectory u;
    std::vector<int> indices;
};

LoadedControls read_controls_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open controls file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("controls file '" + path + "' is empty");
    std::vector<int> indices;
    {
        std::stringstream ss(trim(line));
        std::string tok;
        bool first = true;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (first) {
                if (tok != "time") throw std::runtime_error("controls file must start with a 'time' column");
                first = false;
                continue;
            }
            int idx = 0;
            if (tok.size() < 2 || tok[0] != 'u' || !parse_int(tok.substr(1), idx))
                throw std::runtime_error("controls column '" + tok + "' is not of the form u<index>");
            indices.push_back(idx);
        }
    }
    if (indices.empty()) throw std::runtime_error("controls file lists no control columns");
    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) {
            double v = 0.0;
            if (!parse_real(trim(tok), v))
                throw std::runtime_error("controls file line " + std::to_string(lineno) + ": bad number '" + tok + "'");
            vals.push_back(v);
        }
        if (vals.size() != indices.size() + 1)
            throw std::runtime_error("controls file line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(indices.size() + 1) + " columns");
        times.push_back(vals[0]);
        vals.erase(vals.begin());
        rows.push_back(std::move(vals));
    }
    if (rows.size() < 1) throw std::runtime_error("controls file has no data rows");
    double tau = 0.0;
    if (rows.size() == 1) throw std::runtime_error("controls file needs at least two rows to fix the step size");
    tau = times[1] - times[0];
    for (size_t k = 0; k + 1 < times.size(); ++k)
        if (std::abs((times[k + 1] - times[k]) - tau) > 1e-9 * std::max(1.0, std::abs(tau)))
            throw std::runtime_error("controls file time column is not uniformly spaced");
    if (!(tau > 0.0)) throw std::runtime_error("controls file time column must increase");
    ControlTrajectory u(static_cast<int>(indices.size()), static_cast<int>(rows.size()), tau);
    for (size_t k = 0; k < rows.size(); ++k)
        for (size_t s = 0; s < indices.size(); ++s)
            u.at(static_cast<int>(s), static_cast<int>(k)) = rows[k][s];
    return {std::move(u), std::move(indices)};
}

} // namespace

int run_optimize(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const Grid2D grid(cfg.n);
    const ScalarField theta0 = preset_theta0(cfg.theta0, grid);

    OptimizeConfig oc;
    oc.indices = cfg.basis;
    oc.scaled = cfg.scaled;
    oc.r = cfg.r;
    oc.t_f = cfg.t_f;
    oc.tau = cfg.tau;
    oc.lambda0 = cfg.lambda0;
    oc.alpha0 = cfg.alpha0;
    oc.eps1 = cfg.eps1;
    oc.eps2 = cfg.eps2;
    oc.max_iter = cfg.max_iter;
    oc.u0 = cfg.u0;
    oc.adjoint = cfg.adjoint_scheme == "explicit" ? AdjointScheme::Explicit : AdjointScheme::Transpose;
    oc.source = cfg.source_form == "sum-of-squares" ? SourceForm::SumOfSquares : SourceForm::SquareOfSum;
    oc.p_mode = cfg.p_assembly == "quadrature" ? PAssembly::Quadrature : PAssembly::DiscreteExact;
    oc.cg.tol = cfg.cg_tol;
    oc.cg.max_iter = cfg.cg_max_iter;

    const OptimizeResult res = optimize(oc, theta0, [](const IterationRow& row) {
        std::printf("iter %3d  J=%-12.6g mu=%-12.4g lambda=%-12.6g alpha=%-7.4g beta=%.6g\n",
                    row.k, row.J, row.mu, row.lambda, row.alpha, row.beta);
        std::fflush(stdout);
    });

    fs::create_directories(cfg.outdir);
    {
        CsvFile f(fs::path(cfg.outdir) / "iterations.csv");
        f.header({"k", "J", "mu", "lambda", "alpha", "beta"});
        for (const IterationRow& row : res.history) {
            f.begin_row();
            f.cell_int(row.k);
            f.cell(row.J);
            f.cell(row.mu);
            f.cell(row.lambda);
            f.cell(row.alpha);
            f.cell(row.beta);
            f.end_row();
        }
    }
    write_controls_csv(cfg, res.u, cfg.basis);
    write_mixnorm_csv(cfg, res.record);
    write_snapshots(cfg, res.record);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(cfg, "optimize", wall,
                   json{{"converged", res.converged},
                        {"iterations", res.iterations},
                        {"J", res.J},
                        {"mu", res.mu},
                        {"lambda", res.lambda},
                        {"theta_bar", res.theta_bar},
                        {"c0_sq", res.c0_sq},
                        {"final_mix_sq", res.final_mix_sq},
                        {"target_mix_sq", cfg.r * cfg.r * res.c0_sq}});

    std::printf("%s after %d iterations: J=%.6g mu=%.4g lambda=%.6g\n",
                res.converged ? "converged" : "NOT converged", res.iterations, res.J, res.mu, res.lambda);
    return res.converged ? kExitOk : kExitNotConverged;
}

int run_simulate(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const Grid2D grid(cfg.n);
    const ScalarField theta0 = preset_theta0(cfg.theta0, grid);
    const MixNormContext mix(grid);
    const double theta_bar = mean(theta0);

    std::vector<int> indices = cfg.basis;
    std::optional<ControlTrajectory> u;
    if (!cfg.controls_file.empty()) {
        LoadedControls lc = read_controls_csv(cfg.controls_file);
        indices = lc.indices;
        u.emplace(std::move(lc.u));
    } else {
        const double steps_real = cfg.t_f / cfg.tau;
        const int T = static_cast<int>(std::llround(steps_real));
        std::vector<double> u0 = cfg.u0;
        if (u0.empty()) {
            u0.resize(indices.size());
            for (size_t i = 0; i < indices.size(); ++i) u0[i] = (indices[i] == 1) ? 0.0 : 1.0;
        }
        u.emplace(ControlTrajectory::constant(u0, T, cfg.tau));
    }

    const BasisSet basis(grid, indices, cfg.scaled);
    SolveStateOptions so;
    so.cg.tol = cfg.cg_tol;
    so.cg.max_iter = cfg.cg_max_iter;
    so.mix = &mix;
    so.theta_bar = theta_bar;
    const TrajectoryRecord rec = solve_state(theta0, basis, *u, so);

    RunConfig out_cfg = cfg;
    out_cfg.basis = indices;
    write_controls_csv(out_cfg, *u, indices);
    write_mixnorm_csv(out_cfg, rec);
    write_snapshots(out_cfg, rec);

    const double mass0 = integrate(rec.theta.front());
    const double massT = integrate(rec.final_theta());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(cfg, "simulate", wall,
                   json{{"steps", u->steps()},
                        {"cost", rec.cost_cum.empty() ? 0.0 : rec.cost_cum.back()},
                        {"mass_drift", massT - mass0},
                        {"l2_initial", rec.l2.front()},
                        {"l2_final", rec.l2.back()},
                        {"final_mix_sq", rec.mixnorm_sq.back()},
                        {"theta_bar", theta_bar}});
    std::printf("simulated %d steps: final mixnorm_sq=%.10g l2 drift=%.3e mass drift=%.3e\n",
                u->steps(), rec.mixnorm_sq.back(), rec.l2.front() - rec.l2.back(), massT - mass0);
    return kExitOk;
}

int run_mixnorm(const RunConfig& cfg) {
    if (cfg.field_file.empty())
        throw ConfigError({"mixnorm needs field_file (--field) pointing at a snapshot"});
    const Snapshot snap = read_snapshot(cfg.field_file);
    const MixNormContext mix(snap.field.grid());
    const double msq = mix.mix_norm_sq(snap.field);
    std::printf("field=%s n=%d t=%.17g\n", snap.name.c_str(), snap.field.n(), snap.t);
    std::printf("mix_norm_sq=%.17g\n", msq);
    std::printf("mix_norm=%.17g\n", std::sqrt(msq));
    std::printf("l2_norm=%.17g\n", l2_norm(snap.field));
    return kExitOk;
}

int run_mixrate(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const Grid2D grid(cfg.n);
    const ScalarField theta0 = preset_theta0(cfg.mixrate_theta0, grid);
    MixRateOptions opts;
    opts.tau = cfg.tau;
    opts.jobs = cfg.jobs;
    opts.cg.tol = cfg.cg_tol;
    opts.cg.max_iter = cfg.cg_max_iter;
    const std::vector<MixRateEntry> table = mixing_rate_study(cfg.mixrate_N, cfg.t_f, theta0, opts);

    fs::create_directories(cfg.outdir);
    {
        CsvFile f(fs::path(cfg.outdir) / "mixrate.csv");
        f.header({"N", "time", "ratio"});
        for (const MixRateEntry& e : table) {
            for (size_t s = 0; s < e.times.size(); ++s) {
                f.begin_row();
                f.cell_int(e.N);
                f.cell(e.times[s]);
                f.cell(e.ratios[s]);
                f.end_row();
            }
        }
    }
    json rows = json::array();
    for (const MixRateEntry& e : table) {
        std::printf("N=%d ratio(tf)=%.6g exponent=%.4g%s\n", e.N, e.ratio_at_tf, e.exponent,
                    e.kernel_flagged ? " [datum invariant under this flow]" : "");
        rows.push_back(json{{"N", e.N},
                            {"ratio_at_tf", e.ratio_at_tf},
                            {"exponent", e.exponent},
                            {"kernel_flagged", e.kernel_flagged}});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(cfg, "mixrate", wall, json{{"table", rows}});
    return kExitOk;
}

int run_feasibility(const RunConfig& cfg) {
    double norm_h1 = cfg.feas_normh1;
    double norm_dual = cfg.feas_normdual;
    if (!(norm_h1 > 0.0) || !(norm_dual > 0.0)) {
        const Grid2D grid(cfg.n);
        const ScalarField theta0 = preset_theta0(cfg.theta0, grid);
        const double theta_bar = mean(theta0);
        ScalarField dev = theta0;
        for (int j = 0; j < grid.n; ++j)
            for (int k = 0; k < grid.n; ++k) dev(j, k) -= theta_bar;
        const MixNormContext mix(grid);
        if (!(norm_h1 > 0.0)) norm_h1 = h1_norm(dev);
        if (!(norm_dual > 0.0)) norm_dual = mix.mix_norm(dev);
    }
    double c2 = cfg.feas_c2;
    if (cfg.calibrate_ratio > 0.0 && cfg.calibrate_N > 0)
        c2 = calibrate_c2(cfg.calibrate_ratio, cfg.calibrate_N, cfg.t_f, cfg.feas_eps);
    if (!(c2 > 0.0))
        throw ConfigError({"feasibility needs a positive rate constant: set feas_c2 (--c2) or both "
                           "calibrate_ratio (--calibrate-ratio) and calibrate_N (--calibrate-N)"});
    const FeasibilityInput in{norm_h1, norm_dual, cfg.r, cfg.t_f, cfg.feas_eps, c2};
    const long long N = feasibility_N(in);
    std::printf("norm_h1=%.17g\nnorm_dual=%.17g\nr=%.17g\ntf=%.17g\neps=%.17g\nc2=%.17g\n",
                norm_h1, norm_dual, cfg.r, cfg.t_f, cfg.feas_eps, c2);
    std::printf("N_feasible=%lld\n", N);
    return kExitOk;
}

int run_period(const RunConfig& cfg) {
    const double T = orbit_period(cfg.period_N, cfg.period_I, cfg.scaled);
    std::printf("N=%d I=%.17g scaled=%d\n", cfg.period_N, cfg.period_I, cfg.scaled ? 1 : 0);
    std::printf("period=%.17g\n", T);
    std::printf("center_limit=%.17g\n", orbit_period_center_limit(cfg.period_N, cfg.scaled));
    std::printf("log_asymptote=%.17g\n", orbit_period_log_asymptote(cfg.period_N, cfg.period_I, cfg.scaled));
    return kExitOk;
}

} // namespace mixopt
