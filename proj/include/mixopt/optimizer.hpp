/// @file optimizer.hpp
/// @brief Fixed-point iteration on the first-order optimality system: per-step
///        Gram matrix M and pairing vector p, relaxed control update, projected
///        multiplier update with adaptive step schedules, and the stopping
///        rules; plus the feasibility frequency bound and the mixing-rate
///        study used to validate the cellular-flow decay trend.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixopt/basis.hpp"
#include "mixopt/grid.hpp"
#include "mixopt/mixnorm.hpp"
#include "mixopt/transport.hpp"

namespace mixopt {

/** Gram matrix M_ij = <theta, b_i . b_j> with the integrand clamped at zero
 *  (small negative undershoots are a discretization artifact) and a Tikhonov
 *  shift sigma I, sigma = 1e-10 trace(M)/N, so the per-step solve cannot go
 *  singular where theta vanishes. Row-major N x N, exactly symmetric. */
std::vector<double> assemble_M(const ScalarField& theta, const BasisSet& basis);

enum class PAssembly {
    /** Pair the adjoint with the advection stencil applied to the next state:
     *  p_i(k) = <A_i (rho_k + tau/2 |v_k|^2), theta_{k+1}>_W.  This is the
     *  exact partial derivative of the discrete Lagrangian, so the control
     *  update drives the true discrete gradient to zero (verified against
     *  central finite differences). */
    DiscreteExact,
    /** Literal quadrature p_i(k) = <b_i . grad rho_k, theta_k>_W with the
     *  second-order gradient; consistent but O(h^2 + tau) away from the
     *  discrete stationarity point. */
    Quadrature,
};

/** Pairing vector p for every step, flattened as p[k*N + i]. The trajectory
 *  records must match the control in step count. */
std::vector<double> assemble_p(const TrajectoryRecord& state, const std::vector<ScalarField>& rho,
                               const BasisSet& basis, const ControlTrajectory& u,
                               PAssembly mode = PAssembly::DiscreteExact);

/** Exact gradient of the discrete objective
 *      G = cost + lambda (mix_norm_sq(theta_T - theta_bar) - r^2 C0^2)
 *  with respect to every control entry, flattened as g[k*N + i]; rho must be
 *  the adjoint sweep for the same lambda. Used by the finite-difference
 *  check; the optimizer itself consumes M and p. */
std::vector<double> control_gradient(const TrajectoryRecord& state, const std::vector<ScalarField>& rho,
                                     const BasisSet& basis, const ControlTrajectory& u);

/** Relaxed fixed-point update u <- (1-alpha) u + alpha M^{-1} p per step.
 *  M is per-step N x N (flattened T*N*N), p per-step N (flattened T*N). */
ControlTrajectory update_u(const ControlTrajectory& u, const std::vector<double>& M_per_step,
                           const std::vector<double>& p_per_step, double alpha);

/// Projected multiplier update: max(lambda + beta * mu, 0).
double update_lambda(double lambda, double beta, double mu);

/// Relaxation schedule: halve toward the 0.05 floor once the constraint is met.
double schedule_alpha(double alpha, double mu, double eps1);

/** Multiplier step schedule: 2J/mu while infeasible with J >= 1, a flat 100
 *  while infeasible with small J, and 250 once feasible. */
double schedule_beta(double J, double mu, double eps1);

struct OptimizeConfig {
    std::vector<int> indices{1, 2};   ///< cellular frequencies to actuate
    bool scaled = false;
    double r = 0.3;                   ///< target mix-norm ratio
    double t_f = 1.0;
    double tau = 0.005;
    double lambda0 = 1.0;
    double alpha0 = 0.6;
    double eps1 = 5e-4;               ///< constraint-violation tolerance
    double eps2 = 1e-3;               ///< relative cost-change tolerance
    int max_iter = 200;
    std::vector<double> u0;           ///< initial control; empty = one-hot profile (index 1 idle, others on)
    AdjointScheme adjoint = AdjointScheme::Transpose;
    SourceForm source = SourceForm::SquareOfSum;
    PAssembly p_mode = PAssembly::DiscreteExact;
    CgOptions cg;
    bool record_final_series = true;  ///< re-run the accepted control with full series for reporting
};

struct IterationRow {
    int k;
    double J;        ///< stirring energy of the current control
    double mu;       ///< constraint violation of the trajectory it generated
    double lambda;   ///< multiplier after this iteration's projected update
    double alpha;    ///< relaxation factor used for the next control
    double beta;     ///< multiplier step chosen this iteration
};

struct OptimizeResult {
    bool converged = false;
    int iterations = 0;
    std::vector<IterationRow> history;
    ControlTrajectory u;             ///< accepted control (the one that met the tests)
    TrajectoryRecord record;         ///< trajectory of the accepted control
    double theta_bar = 0.0;
    double c0_sq = 0.0;              ///< initial squared mix-norm distance from uniform
    double final_mix_sq = 0.0;       ///< final squared mix-norm distance
    double lambda = 0.0;
    double J = 0.0;
    double mu = 0.0;
};

/** Run the fixed-point loop from theta0.  Per iteration: forward solve with
 *  the current control, violation of its final state, multiplier step and
 *  projection, backward adjoint sweep, then the relaxed control update.
 *  Stops when the violation is within eps1 and the cost has settled to
 *  relative eps2, or at max_iter (reported as non-converged, never thrown).
 *  The optional callback observes each history row as it is produced. */
OptimizeResult optimize(const OptimizeConfig& cfg, const ScalarField& theta0,
                        const std::function<void(const IterationRow&)>& on_iteration = {});

struct FeasibilityInput {
    double norm_h1;    ///< H1 size of the initial deviation from uniform
    double norm_dual;  ///< its mix-norm (dual H1) size
    double r;          ///< target ratio in (0,1)
    double t_f;
    double eps;        ///< rate-loss parameter in (0, 1/3)
    double c2;         ///< decay-rate constant (measured or assumed)
};

/** Smallest cellular frequency N guaranteed to reach the mixing target by
 *  t_f under the power-law decay model with constant c2:
 *      ceil( (c2 norm_h1 / (r norm_dual))^{2/(1-3 eps)} / t_f^{2/3} ),
 *  floored at 1. */
long long feasibility_N(const FeasibilityInput& in);

/** Back-solve the decay constant from one measured run: given the observed
 *  ratio ||theta(t_f)-bar||_dual / ||theta0-bar||_H1 under steady stirring at
 *  frequency N, returns c2 = ratio * (N^{3/2} t_f)^{1/3 - eps}. */
double calibrate_c2(double measured_ratio, int N, double t_f, double eps);

struct MixRateEntry {
    int N;
    std::vector<double> times;
    std::vector<double> ratios;     ///< mix-norm of deviation over initial H1 size
    double ratio_at_tf = 0.0;
    double exponent = 0.0;          ///< fitted decay power over the tail window
    bool kernel_flagged = false;    ///< datum invariant under this flow; no decay expected
};

struct MixRateOptions {
    double tau = 0.005;
    double fit_window_start_fraction = 0.2;  ///< fit on [fraction * t_f, t_f]
    int jobs = 1;                            ///< per-N solves run concurrently when > 1
    CgOptions cg;
};

/** Steady unit stirring at each listed frequency from the given datum;
 *  records the mix-norm decay ratio over time and fits the log-log slope on
 *  the tail window. Results are ordered as the input frequencies. */
std::vector<MixRateEntry> mixing_rate_study(const std::vector<int>& Ns, double t_f,
                                            const ScalarField& theta0, const MixRateOptions& opts = {});

} // namespace mixopt
