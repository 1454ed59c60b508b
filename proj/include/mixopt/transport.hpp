/// @file transport.hpp
/// @brief Advection of the scalar by the stirring field (implicit Euler with a
///        skew-symmetric stencil) and the matching backward adjoint sweep.

#pragma once

#include <optional>
#include <vector>

#include "mixopt/basis.hpp"
#include "mixopt/grid.hpp"
#include "mixopt/mixnorm.hpp"

namespace mixopt {

/** Piecewise-constant control coefficients u_i(t) on a uniform time grid:
 *  u(slot, k) holds on [k tau, (k+1) tau). */
class ControlTrajectory {
public:
    ControlTrajectory(int num_basis, int steps, double tau);

    int count() const { return num_basis_; }
    int steps() const { return steps_; }
    double tau() const { return tau_; }

    double& at(int slot, int k) { return u_[static_cast<size_t>(slot) * steps_ + k]; }
    double at(int slot, int k) const { return u_[static_cast<size_t>(slot) * steps_ + k]; }

    /// All coefficients at one time step.
    std::vector<double> slice(int k) const;

    /// Constant-in-time profile from one coefficient vector.
    static ControlTrajectory constant(const std::vector<double>& u0, int steps, double tau);

private:
    int num_basis_;
    int steps_;
    double tau_;
    std::vector<double> u_;
};

/** The skew-symmetric advection operator
 *      A(v) f = (v . grad f + div(v f)) / 2
 *  discretized with the summation-by-parts difference stencils.  For a
 *  velocity that is discretely divergence free and tangential on the walls
 *  (the discrete-curl samples of BasisSet), A is exactly antisymmetric in the
 *  trapezoid inner product and annihilates constants, which yields mass
 *  conservation and L2 non-increase for the implicit Euler step. */
class AdvectionOperator {
public:
    explicit AdvectionOperator(VectorField v);

    const Grid2D& grid() const { return v_.grid(); }

    /// out = A(v) in. Grids must match.
    void apply(const ScalarField& in, ScalarField& out) const;

    /// Largest componentwise speed; tau * max_speed / h is the advective CFL number.
    double max_speed() const { return max_speed_; }

private:
    VectorField v_;
    double max_speed_;
};

struct CgOptions {
    double tol = 1e-12;    ///< relative residual target
    int max_iter = 500;
};

/** Solve (I + sign tau A) x = b for the W-normal operator A by conjugate
 *  gradients on the equivalent SPD system (I - tau^2 A^2) x = (I - sign tau A) b.
 *  Throws when CG stalls, which signals that tau * max_speed / h is too large
 *  for the solver tolerance requested. */
ScalarField solve_resolvent(const AdvectionOperator& A, const ScalarField& b, double tau,
                            double sign, const CgOptions& opts = {});

/** One implicit Euler transport step: solve (I + tau A(v)) theta_next = theta.
 *  Unconditionally stable; the mean is conserved to solver tolerance and the
 *  L2 norm cannot increase. */
ScalarField step_state_implicit(const ScalarField& theta, const VectorField& v, double tau,
                                const CgOptions& opts = {});

/** One explicit Euler step of the backward adjoint equation,
 *      rho_k = rho_{k+1} + tau (A(v) rho_{k+1} + source).
 *  Requires the advective CFL number tau * max_speed / h <= 1. Kept as the
 *  textbook variant; the production adjoint sweep uses the transpose scheme,
 *  because over long horizons the centered-in-space explicit step amplifies
 *  high modes regardless of the CFL number. */
ScalarField step_adjoint_explicit(const ScalarField& rho_next, const VectorField& v,
                                  const ScalarField& source, double tau);

/** Kinetic source field for the adjoint equation. SquareOfSum is half the
 *  squared magnitude of the assembled velocity (the derivative of the cost
 *  integrand, which keeps the adjoint-based gradient exact); SumOfSquares is
 *  the literal half sum of the squared individual terms. */
enum class SourceForm { SquareOfSum, SumOfSquares };

ScalarField make_adjoint_source(const BasisSet& basis, const std::vector<double>& u_slice,
                                SourceForm form = SourceForm::SquareOfSum);

/// Energy of one step: 0.5 * <theta, |sum_i u_i b_i|^2> (pointwise samples).
double step_cost(const ScalarField& theta, const BasisSet& basis, const std::vector<double>& u_slice);

/** Forward solve artifacts. theta holds T+1 fields (initial datum included);
 *  cost_cum[k] is the accumulated stirring energy after step k (left-endpoint
 *  rule in time); l2 monitors the O(tau) dissipation budget of the implicit
 *  step; mixnorm_sq tracks the squared mix-norm distance from uniform and is
 *  filled only when a MixNormContext is supplied (it costs one transform per
 *  step). */
struct TrajectoryRecord {
    double tau = 0.0;
    std::vector<ScalarField> theta;
    std::vector<double> cost_cum;
    std::vector<double> l2;
    std::vector<double> mixnorm_sq;

    const ScalarField& final_theta() const { return theta.back(); }
};

struct SolveStateOptions {
    CgOptions cg;
    const MixNormContext* mix = nullptr;  ///< record the mix-norm series when set
    double theta_bar = 0.0;               ///< uniform reference for that series
};

/** March the scalar through all steps of u, advecting with the discrete-curl
 *  samples so the conservation identities hold exactly. */
TrajectoryRecord solve_state(const ScalarField& theta0, const BasisSet& basis,
                             const ControlTrajectory& u, const SolveStateOptions& opts = {});

enum class AdjointScheme { Transpose, Explicit };

struct SolveAdjointOptions {
    AdjointScheme scheme = AdjointScheme::Transpose;
    SourceForm source = SourceForm::SquareOfSum;
    CgOptions cg;
};

/** Backward adjoint sweep. The terminal condition is the scaled mix-norm
 *  gradient -2 lambda B(theta_tf - theta_bar); each backward step applies the
 *  W-transpose of the forward step and subtracts the kinetic source, so that
 *  together with solve_state the discrete chain rule is exact (the Explicit
 *  scheme trades that exactness for the textbook time discretization and
 *  substeps as needed to respect its CFL bound).  Returns rho at every time
 *  node, index 0..T. */
std::vector<ScalarField> solve_adjoint(const ScalarField& theta_tf, double theta_bar, double lambda,
                                       const BasisSet& basis, const ControlTrajectory& u,
                                       const MixNormContext& mix, const SolveAdjointOptions& opts = {});

/** Total stirring energy of a trajectory: sum of step costs, left endpoints. */
double cost_of(const TrajectoryRecord& record, const BasisSet& basis, const ControlTrajectory& u);

} // namespace mixopt
