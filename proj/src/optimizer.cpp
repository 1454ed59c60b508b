#include "mixopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

namespace mixopt {

namespace {

// Gram entries <theta, b_i . b_j>_W, optionally with the integrand clamped at
// zero. Returns row-major N x N.
std::vector<double> gram(const ScalarField& theta, const BasisSet& basis, bool clamp) {
    const int N = basis.count();
    const int n = theta.n();
    std::vector<double> M(static_cast<size_t>(N) * N, 0.0);
    for (int a = 0; a < N; ++a) {
        for (int b = a; b < N; ++b) {
            const ScalarField& bxa = basis.bx(a);
            const ScalarField& bya = basis.by(a);
            const ScalarField& bxb = basis.bx(b);
            const ScalarField& byb = basis.by(b);
            const double h = theta.grid().h;
            double total = 0.0;
            for (int j = 0; j < n; ++j) {
                const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
                double row = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double wk = (k == 0 || k == n - 1) ? 0.5 : 1.0;
                    double th = theta(j, k);
                    if (clamp && th < 0.0) th = 0.0;
                    row += wk * th * (bxa(j, k) * bxb(j, k) + bya(j, k) * byb(j, k));
                }
                total += wj * row;
            }
            M[static_cast<size_t>(a) * N + b] = M[static_cast<size_t>(b) * N + a] = total * h * h;
        }
    }
    return M;
}

// Solve the small dense system M x = b by Gaussian elimination with partial
// pivoting. N is a handful at most, so no factorization library is warranted.
std::vector<double> solve_dense(std::vector<double> M, std::vector<double> b, int N) {
    for (int col = 0; col < N; ++col) {
        int piv = col;
        for (int r = col + 1; r < N; ++r)
            if (std::abs(M[static_cast<size_t>(r) * N + col]) > std::abs(M[static_cast<size_t>(piv) * N + col]))
                piv = r;
        if (M[static_cast<size_t>(piv) * N + col] == 0.0)
            throw std::runtime_error("update_u: singular step matrix despite regularization");
        if (piv != col) {
            for (int c = 0; c < N; ++c)
                std::swap(M[static_cast<size_t>(piv) * N + c], M[static_cast<size_t>(col) * N + c]);
            std::swap(b[piv], b[col]);
        }
        const double d = M[static_cast<size_t>(col) * N + col];
        for (int r = col + 1; r < N; ++r) {
            const double f = M[static_cast<size_t>(r) * N + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < N; ++c)
                M[static_cast<size_t>(r) * N + c] -= f * M[static_cast<size_t>(col) * N + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(N);
    for (int r = N - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < N; ++c) acc -= M[static_cast<size_t>(r) * N + c] * x[c];
        x[r] = acc / M[static_cast<size_t>(r) * N + r];
    }
    return x;
}

// p entries by the exact pairing for one step.
void p_exact_step(const TrajectoryRecord& state, const std::vector<ScalarField>& rho,
                  const BasisSet& basis, const ControlTrajectory& u, int k, double* out) {
    const std::vector<double> uk = u.slice(k);
    // Reconstruct the half-step adjoint the transpose sweep paired with the
    // advection term: rho_k plus tau times the kinetic source.
    ScalarField pi = rho[k];
    const ScalarField source = make_adjoint_source(basis, uk, SourceForm::SquareOfSum);
    pi.add_scaled(u.tau(), source);
    ScalarField tmp(basis.grid());
    for (int i = 0; i < basis.count(); ++i) {
        const AdvectionOperator Ai(VectorField(basis.qx(i), basis.qy(i)));
        Ai.apply(pi, tmp);
        out[i] = inner(tmp, state.theta[k + 1]);
    }
}

void p_quadrature_step(const TrajectoryRecord& state, const std::vector<ScalarField>& rho,
                       const BasisSet& basis, int k, double* out) {
    const ScalarField gx = diff_x(rho[k]);
    const ScalarField gy = diff_y(rho[k]);
    const int n = basis.grid().n;
    ScalarField integrand(basis.grid());
    for (int i = 0; i < basis.count(); ++i) {
        const ScalarField& bx = basis.bx(i);
        const ScalarField& by = basis.by(i);
        for (int j = 0; j < n; ++j)
            for (int q = 0; q < n; ++q)
                integrand(j, q) = bx(j, q) * gx(j, q) + by(j, q) * gy(j, q);
        out[i] = inner(integrand, state.theta[k]);
    }
}

double fit_loglog_slope(const std::vector<double>& t, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(t[i]);
        const double ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m < 2) return 0.0;
    const double denom = m * sxx - sx * sx;
    return denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
}

} // namespace

std::vector<double> assemble_M(const ScalarField& theta, const BasisSet& basis) {
    const int N = basis.count();
    std::vector<double> M = gram(theta, basis, /*clamp=*/true);
    double trace = 0.0;
    for (int a = 0; a < N; ++a) trace += M[static_cast<size_t>(a) * N + a];
    const double sigma = 1e-10 * (trace > 0.0 ? trace / N : 1.0);
    for (int a = 0; a < N; ++a) M[static_cast<size_t>(a) * N + a] += sigma;
    return M;
}

std::vector<double> assemble_p(const TrajectoryRecord& state, const std::vector<ScalarField>& rho,
                               const BasisSet& basis, const ControlTrajectory& u, PAssembly mode) {
    const int T = u.steps();
    const int N = basis.count();
    if (static_cast<int>(state.theta.size()) != T + 1 || static_cast<int>(rho.size()) != T + 1)
        throw std::invalid_argument("assemble_p: trajectory/adjoint step counts do not match the control");
    std::vector<double> p(static_cast<size_t>(T) * N, 0.0);
    for (int k = 0; k < T; ++k) {
        if (mode == PAssembly::DiscreteExact)
            p_exact_step(state, rho, basis, u, k, &p[static_cast<size_t>(k) * N]);
        else
            p_quadrature_step(state, rho, basis, k, &p[static_cast<size_t>(k) * N]);
    }
    return p;
}

std::vector<double> control_gradient(const TrajectoryRecord& state, const std::vector<ScalarField>& rho,
                                     const BasisSet& basis, const ControlTrajectory& u) {
    const int T = u.steps();
    const int N = basis.count();
    const std::vector<double> p = assemble_p(state, rho, basis, u, PAssembly::DiscreteExact);
    std::vector<double> g(static_cast<size_t>(T) * N, 0.0);
    for (int k = 0; k < T; ++k) {
        // Unclamped, unshifted Gram: the true derivative of the cost term.
        const std::vector<double> M = gram(state.theta[k], basis, /*clamp=*/false);
        const std::vector<double> uk = u.slice(k);
        for (int i = 0; i < N; ++i) {
            double Mu = 0.0;
            for (int j = 0; j < N; ++j) Mu += M[static_cast<size_t>(i) * N + j] * uk[j];
            g[static_cast<size_t>(k) * N + i] = u.tau() * (Mu - p[static_cast<size_t>(k) * N + i]);
        }
    }
    return g;
}

ControlTrajectory update_u(const ControlTrajectory& u, const std::vector<double>& M_per_step,
                           const std::vector<double>& p_per_step, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("update_u: relaxation factor must lie in (0,1]");
    const int T = u.steps();
    const int N = u.count();
    if (M_per_step.size() != static_cast<size_t>(T) * N * N || p_per_step.size() != static_cast<size_t>(T) * N)
        throw std::invalid_argument("update_u: per-step matrix/vector sizes do not match the control");
    ControlTrajectory out(N, T, u.tau());
    std::vector<double> M(static_cast<size_t>(N) * N), p(N);
    for (int k = 0; k < T; ++k) {
        std::copy_n(&M_per_step[static_cast<size_t>(k) * N * N], N * N, M.begin());
        std::copy_n(&p_per_step[static_cast<size_t>(k) * N], N, p.begin());
        const std::vector<double> x = solve_dense(M, p, N);
        for (int i = 0; i < N; ++i)
            out.at(i, k) = (1.0 - alpha) * u.at(i, k) + alpha * x[i];
    }
    return out;
}

double update_lambda(double lambda, double beta, double mu) {
    if (!(beta > 0.0)) throw std::invalid_argument("update_lambda: step size must be positive");
    if (lambda < 0.0) throw std::invalid_argument("update_lambda: multiplier must be nonnegative");
    return std::max(lambda + beta * mu, 0.0);
}

double schedule_alpha(double alpha, double mu, double eps1) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("schedule_alpha: relaxation factor must lie in (0,1]");
    return (mu < eps1) ? std::max(0.5 * alpha, 0.05) : alpha;
}

double schedule_beta(double J, double mu, double eps1) {
    if (mu >= eps1) return (J >= 1.0) ? 2.0 * J / mu : 100.0;
    return 250.0;
}

OptimizeResult optimize(const OptimizeConfig& cfg, const ScalarField& theta0,
                        const std::function<void(const IterationRow&)>& on_iteration) {
    if (!(cfg.r > 0.0) || !(cfg.r < 1.0)) throw std::invalid_argument("optimize: r must lie in (0,1)");
    if (!(cfg.tau > 0.0) || !(cfg.t_f > 0.0)) throw std::invalid_argument("optimize: tau and t_f must be positive");
    const double steps_real = cfg.t_f / cfg.tau;
    const int T = static_cast<int>(std::llround(steps_real));
    if (T < 1 || std::abs(steps_real - T) > 1e-9 * steps_real)
        throw std::invalid_argument("optimize: tau must divide t_f into whole steps");
    if (!(cfg.eps1 > 0.0) || !(cfg.eps2 > 0.0)) throw std::invalid_argument("optimize: tolerances must be positive");
    if (cfg.max_iter < 1) throw std::invalid_argument("optimize: max_iter must be at least 1");
    if (cfg.lambda0 < 0.0) throw std::invalid_argument("optimize: lambda0 must be nonnegative");
    if (!(cfg.alpha0 > 0.0) || cfg.alpha0 > 1.0) throw std::invalid_argument("optimize: alpha0 must lie in (0,1]");

    const Grid2D g = theta0.grid();
    const BasisSet basis(g, cfg.indices, cfg.scaled);
    const MixNormContext mix(g);
    const int N = basis.count();

    const double theta_bar = mean(theta0);
    ScalarField dev = theta0;
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) dev(j, k) -= theta_bar;
    const double c0_sq = mix.mix_norm_sq(dev);
    if (!(c0_sq > 0.0))
        throw std::invalid_argument("optimize: initial datum is uniform; nothing to mix");

    std::vector<double> u0 = cfg.u0;
    if (u0.empty()) {
        // Default profile: leave the fundamental cell idle, switch the finer
        // frequencies on; this seeds the iteration with actual stirring.
        u0.resize(N);
        for (int i = 0; i < N; ++i) u0[i] = (basis.indices()[i] == 1) ? 0.0 : 1.0;
    }
    if (u0.size() != static_cast<size_t>(N))
        throw std::invalid_argument("optimize: initial control length does not match the basis");

    ControlTrajectory u = ControlTrajectory::constant(u0, T, cfg.tau);
    double lambda = cfg.lambda0;
    double alpha = cfg.alpha0;
    double J_prev = 0.0;
    bool have_prev = false;

    OptimizeResult res{.converged = false, .iterations = 0, .history = {}, .u = u,
                       .record = {}, .theta_bar = theta_bar, .c0_sq = c0_sq,
                       .final_mix_sq = 0.0, .lambda = lambda, .J = 0.0, .mu = 0.0};

    SolveStateOptions fwd;
    fwd.cg = cfg.cg;
    SolveAdjointOptions adj;
    adj.scheme = cfg.adjoint;
    adj.source = cfg.source;
    adj.cg = cfg.cg;

    for (int k = 0; k < cfg.max_iter; ++k) {
        TrajectoryRecord rec = solve_state(theta0, basis, u, fwd);
        const double J = rec.cost_cum.empty() ? 0.0 : rec.cost_cum.back();
        const double mu = mix.violation(rec.final_theta(), theta_bar, cfg.r, c0_sq);

        const double beta = schedule_beta(J, mu, cfg.eps1);
        lambda = update_lambda(lambda, beta, mu);

        const std::vector<ScalarField> rho =
            solve_adjoint(rec.final_theta(), theta_bar, lambda, basis, u, mix, adj);

        alpha = schedule_alpha(alpha, mu, cfg.eps1);

        std::vector<double> M_all(static_cast<size_t>(T) * N * N);
        for (int m = 0; m < T; ++m) {
            const std::vector<double> Mk = assemble_M(rec.theta[m], basis);
            std::copy(Mk.begin(), Mk.end(), M_all.begin() + static_cast<size_t>(m) * N * N);
        }
        const std::vector<double> p_all = assemble_p(rec, rho, basis, u, cfg.p_mode);

        const IterationRow row{k, J, mu, lambda, alpha, beta};
        res.history.push_back(row);
        if (on_iteration) on_iteration(row);

        const bool feasible = mu <= cfg.eps1;
        const bool settled = have_prev && std::abs(J - J_prev) <= cfg.eps2 * std::abs(J_prev);
        if (feasible && settled) {
            res.converged = true;
            res.iterations = k + 1;
            res.u = u;
            res.record = std::move(rec);
            res.J = J;
            res.mu = mu;
            res.lambda = lambda;
            res.final_mix_sq = mu + cfg.r * cfg.r * c0_sq;
            break;
        }

        u = update_u(u, M_all, p_all, alpha);
        J_prev = J;
        have_prev = true;
    }

    if (!res.converged) {
        // Exhausted max_iter: re-evaluate the last control so the reported
        // artifacts match it.
        res.iterations = static_cast<int>(res.history.size());
        res.u = u;
        TrajectoryRecord rec = solve_state(theta0, basis, u, fwd);
        res.J = rec.cost_cum.empty() ? 0.0 : rec.cost_cum.back();
        res.mu = mix.violation(rec.final_theta(), theta_bar, cfg.r, c0_sq);
        res.lambda = lambda;
        res.final_mix_sq = res.mu + cfg.r * cfg.r * c0_sq;
        res.record = std::move(rec);
    }

    if (cfg.record_final_series) {
        SolveStateOptions full = fwd;
        full.mix = &mix;
        full.theta_bar = theta_bar;
        res.record = solve_state(theta0, basis, res.u, full);
    }
    return res;
}

long long feasibility_N(const FeasibilityInput& in) {
    if (!(in.norm_h1 > 0.0) || !(in.norm_dual > 0.0))
        throw std::invalid_argument("feasibility_N: norms must be positive");
    if (!(in.r > 0.0) || !(in.r < 1.0))
        throw std::invalid_argument("feasibility_N: r must lie in (0,1)");
    if (!(in.t_f > 0.0)) throw std::invalid_argument("feasibility_N: t_f must be positive");
    if (!(in.eps > 0.0) || !(in.eps < 1.0 / 3.0))
        throw std::invalid_argument("feasibility_N: eps must lie in (0, 1/3)");
    if (!(in.c2 > 0.0)) throw std::invalid_argument("feasibility_N: c2 must be positive");

    const double X = in.c2 * in.norm_h1 / (in.r * in.norm_dual);
    const double val = std::pow(X, 2.0 / (1.0 - 3.0 * in.eps)) / std::pow(in.t_f, 2.0 / 3.0);
    if (!(val < 9e18)) throw std::invalid_argument("feasibility_N: bound overflows the integer range");
    // Guard the exact-integer edge against floating-point slop before ceiling.
    const double nearest = std::nearbyint(val);
    const double v = (std::abs(val - nearest) < 1e-9 * std::max(1.0, nearest)) ? nearest : val;
    return std::max(1LL, static_cast<long long>(std::ceil(v)));
}

double calibrate_c2(double measured_ratio, int N, double t_f, double eps) {
    if (!(measured_ratio > 0.0)) throw std::invalid_argument("calibrate_c2: ratio must be positive");
    if (N < 1) throw std::invalid_argument("calibrate_c2: N must be positive");
    if (!(t_f > 0.0)) throw std::invalid_argument("calibrate_c2: t_f must be positive");
    if (!(eps > 0.0) || !(eps < 1.0 / 3.0)) throw std::invalid_argument("calibrate_c2: eps must lie in (0, 1/3)");
    return measured_ratio * std::pow(std::pow(static_cast<double>(N), 1.5) * t_f, 1.0 / 3.0 - eps);
}

std::vector<MixRateEntry> mixing_rate_study(const std::vector<int>& Ns, double t_f,
                                            const ScalarField& theta0, const MixRateOptions& opts) {
    if (Ns.empty()) throw std::invalid_argument("mixing_rate_study: need at least one frequency");
    const double steps_real = t_f / opts.tau;
    const int T = static_cast<int>(std::llround(steps_real));
    if (T < 1 || std::abs(steps_real - T) > 1e-9 * steps_real)
        throw std::invalid_argument("mixing_rate_study: tau must divide t_f into whole steps");

    const Grid2D g = theta0.grid();
    const MixNormContext mix(g);
    const double theta_bar = mean(theta0);
    ScalarField dev = theta0;
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) dev(j, k) -= theta_bar;
    const double h1 = h1_norm(dev);
    if (!(h1 > 0.0)) throw std::invalid_argument("mixing_rate_study: datum is uniform");

    auto run_one = [&](int N) -> MixRateEntry {
        MixRateEntry e;
        e.N = N;
        const BasisSet basis(g, {N});
        // Kernel test: a datum the flow merely rearranges along its own
        // streamlines produces no decay; flag it rather than fit noise. The
        // sampled advection term only cancels to O(h^2), so measure it
        // against the size of the non-cancelling product |b| |grad theta|.
        const ScalarField gx = diff_x(theta0);
        const ScalarField gy = diff_y(theta0);
        ScalarField adv(g), mag(g);
        for (int j = 0; j < g.n; ++j)
            for (int k = 0; k < g.n; ++k) {
                const double bx = basis.bx(0)(j, k), by = basis.by(0)(j, k);
                adv(j, k) = bx * gx(j, k) + by * gy(j, k);
                mag(j, k) = std::hypot(bx, by) * std::hypot(gx(j, k), gy(j, k));
            }
        e.kernel_flagged = l2_norm(adv) <= 0.02 * l2_norm(mag);

        SolveStateOptions so;
        so.cg = opts.cg;
        so.mix = &mix;
        so.theta_bar = theta_bar;
        const ControlTrajectory u = ControlTrajectory::constant({1.0}, T, opts.tau);
        const TrajectoryRecord rec = solve_state(theta0, basis, u, so);

        e.times.resize(rec.mixnorm_sq.size());
        e.ratios.resize(rec.mixnorm_sq.size());
        for (size_t s = 0; s < rec.mixnorm_sq.size(); ++s) {
            e.times[s] = static_cast<double>(s) * opts.tau;
            e.ratios[s] = std::sqrt(std::max(rec.mixnorm_sq[s], 0.0)) / h1;
        }
        e.ratio_at_tf = e.ratios.back();

        std::vector<double> tw, rw;
        const double t0 = opts.fit_window_start_fraction * t_f;
        for (size_t s = 0; s < e.times.size(); ++s) {
            if (e.times[s] + 1e-12 >= t0) {
                tw.push_back(e.times[s]);
                rw.push_back(e.ratios[s]);
            }
        }
        e.exponent = e.kernel_flagged ? 0.0 : -fit_loglog_slope(tw, rw);
        return e;
    };

    std::vector<MixRateEntry> out;
    out.reserve(Ns.size());
    if (opts.jobs > 1) {
        std::vector<std::future<MixRateEntry>> futs;
        futs.reserve(Ns.size());
        for (int N : Ns) futs.push_back(std::async(std::launch::async, run_one, N));
        for (auto& f : futs) out.push_back(f.get());
    } else {
        for (int N : Ns) out.push_back(run_one(N));
    }
    return out;
}

} // namespace mixopt
