#include "mixopt/transport.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mixopt {

ControlTrajectory::ControlTrajectory(int num_basis, int steps, double tau)
    : num_basis_(num_basis), steps_(steps), tau_(tau),
      u_(static_cast<size_t>(num_basis) * steps, 0.0) {
    if (num_basis <= 0 || steps <= 0 || !(tau > 0.0))
        throw std::invalid_argument("ControlTrajectory: need positive basis count, steps and tau");
}

std::vector<double> ControlTrajectory::slice(int k) const {
    std::vector<double> out(num_basis_);
    for (int s = 0; s < num_basis_; ++s) out[s] = at(s, k);
    return out;
}

ControlTrajectory ControlTrajectory::constant(const std::vector<double>& u0, int steps, double tau) {
    ControlTrajectory u(static_cast<int>(u0.size()), steps, tau);
    for (int s = 0; s < static_cast<int>(u0.size()); ++s)
        for (int k = 0; k < steps; ++k) u.at(s, k) = u0[s];
    return u;
}

AdvectionOperator::AdvectionOperator(VectorField v) : v_(std::move(v)), max_speed_(0.0) {
    const size_t m = v_.vx.size();
    for (size_t i = 0; i < m; ++i) {
        max_speed_ = std::max(max_speed_, std::abs(v_.vx.data()[i]));
        max_speed_ = std::max(max_speed_, std::abs(v_.vy.data()[i]));
    }
}

void AdvectionOperator::apply(const ScalarField& in, ScalarField& out) const {
    if (in.grid() != grid() || out.grid() != grid())
        throw std::invalid_argument("AdvectionOperator::apply: grid mismatch");
    const int n = grid().n;
    // Advective half: v . grad(in).
    ScalarField dx = sbp_diff_x(in);
    ScalarField dy = sbp_diff_y(in);
    // Conservative half: div(v in).
    ScalarField px(grid()), py(grid());
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            px(j, k) = v_.vx(j, k) * in(j, k);
            py(j, k) = v_.vy(j, k) * in(j, k);
        }
    }
    ScalarField cx = sbp_diff_x(px);
    ScalarField cy = sbp_diff_y(py);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            out(j, k) = 0.5 * (v_.vx(j, k) * dx(j, k) + v_.vy(j, k) * dy(j, k) + cx(j, k) + cy(j, k));
}

ScalarField solve_resolvent(const AdvectionOperator& A, const ScalarField& b, double tau,
                            double sign, const CgOptions& opts) {
    // Normal system (I - tau^2 A^2) x = (I - sign tau A) b; SPD in the
    // trapezoid inner product because A is W-antisymmetric.
    ScalarField rhs(b.grid()), t1(b.grid()), t2(b.grid());
    A.apply(b, t1);
    rhs = b;
    rhs.add_scaled(-sign * tau, t1);

    auto apply_normal = [&](const ScalarField& x, ScalarField& y) {
        A.apply(x, t1);
        A.apply(t1, t2);
        y = x;
        y.add_scaled(-tau * tau, t2);
    };

    ScalarField x = b;  // warm start: the step is a small perturbation of the identity
    ScalarField r(b.grid()), p(b.grid()), Ap(b.grid());
    apply_normal(x, Ap);
    r = rhs;
    r -= Ap;
    p = r;
    double rr = inner(r, r);
    const double target = opts.tol * opts.tol * std::max(inner(rhs, rhs), 1e-300);
    if (rr <= target) return x;
    for (int it = 0; it < opts.max_iter; ++it) {
        apply_normal(p, Ap);
        const double pAp = inner(p, Ap);
        if (!(pAp > 0.0))
            throw std::runtime_error("solve_resolvent: lost positive definiteness (pAp=" + std::to_string(pAp) + ")");
        const double alpha = rr / pAp;
        x.add_scaled(alpha, p);
        r.add_scaled(-alpha, Ap);
        const double rr_new = inner(r, r);
        if (rr_new <= target) return x;
        p *= rr_new / rr;
        p += r;
        rr = rr_new;
    }
    throw std::runtime_error(
        "solve_resolvent: CG did not reach tol=" + std::to_string(opts.tol) + " in " +
        std::to_string(opts.max_iter) + " iterations; tau*max_speed/h = " +
        std::to_string(tau * A.max_speed() * (b.grid().n - 1)) + " is too stiff");
}

ScalarField step_state_implicit(const ScalarField& theta, const VectorField& v, double tau,
                                const CgOptions& opts) {
    const AdvectionOperator A(v);
    return solve_resolvent(A, theta, tau, +1.0, opts);
}

ScalarField step_adjoint_explicit(const ScalarField& rho_next, const VectorField& v,
                                  const ScalarField& source, double tau) {
    const AdvectionOperator A(v);
    const double cfl = tau * A.max_speed() * (rho_next.grid().n - 1);
    if (cfl > 1.0 + 1e-12)
        throw std::invalid_argument("step_adjoint_explicit: advective CFL number " +
                                    std::to_string(cfl) + " exceeds 1; reduce tau or refine in time");
    ScalarField out(rho_next.grid());
    A.apply(rho_next, out);
    out += source;
    out *= tau;
    out += rho_next;
    return out;
}

ScalarField make_adjoint_source(const BasisSet& basis, const std::vector<double>& u_slice,
                                SourceForm form) {
    if (u_slice.size() != static_cast<size_t>(basis.count()))
        throw std::invalid_argument("make_adjoint_source: coefficient count mismatch");
    const Grid2D g = basis.grid();
    ScalarField s(g);
    if (form == SourceForm::SquareOfSum) {
        const VectorField v = assemble_velocity(basis, u_slice);
        for (int j = 0; j < g.n; ++j)
            for (int k = 0; k < g.n; ++k)
                s(j, k) = 0.5 * (v.vx(j, k) * v.vx(j, k) + v.vy(j, k) * v.vy(j, k));
    } else {
        for (int slot = 0; slot < basis.count(); ++slot) {
            const double c = 0.5 * u_slice[slot] * u_slice[slot];
            const ScalarField& bx = basis.bx(slot);
            const ScalarField& by = basis.by(slot);
            for (int j = 0; j < g.n; ++j)
                for (int k = 0; k < g.n; ++k)
                    s(j, k) += c * (bx(j, k) * bx(j, k) + by(j, k) * by(j, k));
        }
    }
    return s;
}

double step_cost(const ScalarField& theta, const BasisSet& basis, const std::vector<double>& u_slice) {
    // 0.5 <theta, |v|^2> with the pointwise samples; shares the quadrature
    // with the adjoint source so the two stay consistent.
    const ScalarField s = make_adjoint_source(basis, u_slice, SourceForm::SquareOfSum);
    return inner(theta, s);
}

TrajectoryRecord solve_state(const ScalarField& theta0, const BasisSet& basis,
                             const ControlTrajectory& u, const SolveStateOptions& opts) {
    if (theta0.grid() != basis.grid())
        throw std::invalid_argument("solve_state: datum and basis grids differ");
    if (u.count() != basis.count())
        throw std::invalid_argument("solve_state: control has " + std::to_string(u.count()) +
                                    " components for " + std::to_string(basis.count()) + " basis fields");
    const int T = u.steps();
    TrajectoryRecord rec;
    rec.tau = u.tau();
    rec.theta.reserve(T + 1);
    rec.theta.push_back(theta0);
    rec.cost_cum.reserve(T);
    rec.l2.reserve(T + 1);
    rec.l2.push_back(l2_norm(theta0));

    auto record_mix = [&](const ScalarField& th) {
        if (!opts.mix) return;
        ScalarField d = th;
        for (int j = 0; j < d.n(); ++j)
            for (int k = 0; k < d.n(); ++k) d(j, k) -= opts.theta_bar;
        rec.mixnorm_sq.push_back(opts.mix->mix_norm_sq(d));
    };
    record_mix(theta0);

    double cost = 0.0;
    for (int k = 0; k < T; ++k) {
        const std::vector<double> uk = u.slice(k);
        cost += u.tau() * step_cost(rec.theta.back(), basis, uk);
        const VectorField q = assemble_transport_velocity(basis, uk);
        rec.theta.push_back(step_state_implicit(rec.theta.back(), q, u.tau(), opts.cg));
        rec.cost_cum.push_back(cost);
        rec.l2.push_back(l2_norm(rec.theta.back()));
        record_mix(rec.theta.back());
    }
    return rec;
}

std::vector<ScalarField> solve_adjoint(const ScalarField& theta_tf, double theta_bar, double lambda,
                                       const BasisSet& basis, const ControlTrajectory& u,
                                       const MixNormContext& mix, const SolveAdjointOptions& opts) {
    if (lambda < 0.0) throw std::invalid_argument("solve_adjoint: lambda must be nonnegative");
    if (u.count() != basis.count())
        throw std::invalid_argument("solve_adjoint: control/basis size mismatch");
    const int T = u.steps();
    const double tau = u.tau();
    const Grid2D g = basis.grid();

    ScalarField diff = theta_tf;
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) diff(j, k) -= theta_bar;
    ScalarField terminal = mix.mix_gradient(diff);
    terminal *= -2.0 * lambda;

    std::vector<ScalarField> rho(static_cast<size_t>(T) + 1, ScalarField(g));
    rho[T] = std::move(terminal);

    for (int m = T - 1; m >= 0; --m) {
        const std::vector<double> um = u.slice(m);
        const ScalarField source = make_adjoint_source(basis, um, opts.source);
        if (opts.scheme == AdjointScheme::Transpose) {
            const VectorField q = assemble_transport_velocity(basis, um);
            const AdvectionOperator A(q);
            ScalarField r = solve_resolvent(A, rho[m + 1], tau, -1.0, opts.cg);
            r.add_scaled(-tau, source);
            rho[m] = std::move(r);
        } else {
            // Explicit Euler with the kinetic source on the right-hand side of
            // the backward equation; substep to respect the CFL bound.
            const VectorField q = assemble_transport_velocity(basis, um);
            const AdvectionOperator A(q);
            const double cfl = tau * A.max_speed() * (g.n - 1);
            const int nsub = std::max(1, static_cast<int>(std::ceil(cfl)));
            const double dt = tau / nsub;
            ScalarField r = rho[m + 1];
            ScalarField neg_source = source;
            neg_source *= -1.0;
            for (int s = 0; s < nsub; ++s) r = step_adjoint_explicit(r, q, neg_source, dt);
            rho[m] = std::move(r);
        }
    }
    return rho;
}

double cost_of(const TrajectoryRecord& record, const BasisSet& basis, const ControlTrajectory& u) {
    if (static_cast<int>(record.theta.size()) != u.steps() + 1)
        throw std::invalid_argument("cost_of: trajectory has " + std::to_string(record.theta.size()) +
                                    " states for " + std::to_string(u.steps()) + " control steps");
    double cost = 0.0;
    for (int k = 0; k < u.steps(); ++k)
        cost += u.tau() * step_cost(record.theta[k], basis, u.slice(k));
    return cost;
}

} // namespace mixopt
