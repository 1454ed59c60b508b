#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mixopt/basis.hpp"
#include "mixopt/grid.hpp"
#include "mixopt/mixnorm.hpp"
#include "mixopt/transport.hpp"

using namespace mixopt;

namespace {

ScalarField random_field(const Grid2D& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ScalarField f(g);
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) f(j, k) = dist(rng);
    return f;
}

ScalarField constant_field(const Grid2D& g, double c) {
    ScalarField f(g);
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) f(j, k) = c;
    return f;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double worst = 0.0;
    for (int j = 0; j < a.grid().n; ++j)
        for (int k = 0; k < a.grid().n; ++k) worst = std::max(worst, std::abs(a(j, k) - b(j, k)));
    return worst;
}

} // namespace

TEST_SUITE("transport") {

TEST_CASE("control trajectory storage and constant profile") {
    ControlTrajectory u(2, 5, 0.1);
    CHECK(u.count() == 2);
    CHECK(u.steps() == 5);
    CHECK(u.tau() == 0.1);
    u.at(0, 3) = 1.5;
    u.at(1, 0) = -2.0;
    CHECK(u.at(0, 3) == 1.5);
    CHECK(u.slice(3) == std::vector<double>{1.5, 0.0});
    CHECK(u.slice(0) == std::vector<double>{0.0, -2.0});

    ControlTrajectory c = ControlTrajectory::constant({0.25, -1.0}, 4, 0.2);
    for (int k = 0; k < 4; ++k) CHECK(c.slice(k) == std::vector<double>{0.25, -1.0});

    CHECK_THROWS_AS(ControlTrajectory(0, 5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ControlTrajectory(2, 0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ControlTrajectory(2, 5, 0.0), std::invalid_argument);
}

TEST_CASE("advection operator is antisymmetric and annihilates constants") {
    Grid2D g(49);
    BasisSet basis(g, {1, 2});
    AdvectionOperator A(assemble_transport_velocity(basis, {0.7, -0.4}));

    ScalarField f = random_field(g, 1), w = random_field(g, 2);
    ScalarField Af(g), Aw(g);
    A.apply(f, Af);
    A.apply(w, Aw);
    const double skew = inner(Af, w) + inner(f, Aw);
    CHECK(std::abs(skew) <= 1e-12 * (1.0 + std::abs(inner(Af, w))));

    ScalarField ones = constant_field(g, 1.0);
    ScalarField Aones(g);
    A.apply(ones, Aones);
    double worst = 0.0;
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) worst = std::max(worst, std::abs(Aones(j, k)));
    CHECK(worst <= 1e-11);
}

TEST_CASE("resolvent solve hits the requested residual and is exact for tau = 0") {
    Grid2D g(33);
    BasisSet basis(g, {1});
    AdvectionOperator A(assemble_transport_velocity(basis, {1.0}));
    ScalarField b = random_field(g, 5);

    ScalarField x = solve_resolvent(A, b, 0.02, +1.0);
    ScalarField Ax(g);
    A.apply(x, Ax);
    ScalarField resid = x;
    resid.add_scaled(0.02, Ax);
    resid.add_scaled(-1.0, b);
    CHECK(l2_norm(resid) <= 1e-8 * l2_norm(b));

    ScalarField same = solve_resolvent(A, b, 0.0, +1.0);
    CHECK(max_abs_diff(same, b) <= 1e-15);
}

TEST_CASE("state step with zero velocity is the identity") {
    Grid2D g(33);
    BasisSet basis(g, {1});
    ScalarField theta = random_field(g, 9);
    ScalarField next = step_state_implicit(theta, assemble_transport_velocity(basis, {0.0}), 0.01);
    CHECK(max_abs_diff(next, theta) <= 1e-14);
}

TEST_CASE("state stepping is first order in time") {
    Grid2D g(65);
    BasisSet basis(g, {1});
    ScalarField theta0 = sample(g, [](double x1, double) { return std::cos(M_PI * x1); });
    const double t_end = 0.1;
    auto march = [&](double tau) {
        const int steps = static_cast<int>(std::lround(t_end / tau));
        ControlTrajectory u = ControlTrajectory::constant({1.0}, steps, tau);
        return solve_state(theta0, basis, u).final_theta();
    };
    ScalarField a = march(0.01), b = march(0.005), c = march(0.0025);
    ScalarField d1 = a, d2 = b;
    d1.add_scaled(-1.0, b);
    d2.add_scaled(-1.0, c);
    const double ratio = l2_norm(d1) / l2_norm(d2);
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.6);
}

TEST_CASE("mass is conserved and L2 never grows along a forward solve") {
    Grid2D g(65);
    BasisSet basis(g, {1, 2});
    ScalarField theta0 = sample(g, [](double, double x2) { return std::tanh((2.0 * x2 - 1.0) / 0.2) + 1.0; });
    const int steps = 40;
    ControlTrajectory u = ControlTrajectory::constant({0.0, 1.0}, steps, 0.005);
    TrajectoryRecord rec = solve_state(theta0, basis, u);
    REQUIRE(rec.theta.size() == static_cast<size_t>(steps + 1));
    const double mass0 = integrate(rec.theta.front());
    for (int k = 1; k <= steps; ++k) {
        CHECK(std::abs(integrate(rec.theta[k]) - mass0) <= 1e-10);
        CHECK(rec.l2[k] <= rec.l2[k - 1] + 1e-12);
    }
}

TEST_CASE("forward solve with zero control leaves the datum alone and records series") {
    Grid2D g(33);
    BasisSet basis(g, {1, 2});
    MixNormContext mix(g);
    ScalarField theta0 = sample(g, [](double, double x2) { return std::sin(2.0 * M_PI * x2) + 1.0; });
    ControlTrajectory u = ControlTrajectory::constant({0.0, 0.0}, 10, 0.01);
    SolveStateOptions opts;
    opts.mix = &mix;
    opts.theta_bar = 1.0;
    TrajectoryRecord rec = solve_state(theta0, basis, u, opts);
    CHECK(rec.mixnorm_sq.size() == 11);
    REQUIRE(rec.cost_cum.size() == 10);  // one entry per step
    for (int k = 0; k <= 10; ++k) {
        CHECK(max_abs_diff(rec.theta[k], theta0) <= 1e-13);
        if (k < 10) CHECK(rec.cost_cum[k] == 0.0);
        CHECK(std::abs(rec.mixnorm_sq[k] - rec.mixnorm_sq[0]) <= 1e-14);
    }
}

TEST_CASE("reversing the stirring returns close to the initial datum") {
    Grid2D g(65);
    BasisSet basis(g, {1});
    ScalarField theta0 = sample(g, [](double, double x2) { return std::tanh((2.0 * x2 - 1.0) / 0.2) + 1.0; });
    auto round_trip_error = [&](int steps, double tau) {
        TrajectoryRecord fwd = solve_state(theta0, basis, ControlTrajectory::constant({1.0}, steps, tau));
        TrajectoryRecord back =
            solve_state(fwd.final_theta(), basis, ControlTrajectory::constant({-1.0}, steps, tau));
        ScalarField diff = back.final_theta();
        diff.add_scaled(-1.0, theta0);
        return l2_norm(diff) / l2_norm(theta0);
    };
    // The implicit step is dissipative, so the round trip misses by O(tau);
    // halving tau should roughly halve the miss.
    const double coarse = round_trip_error(40, 0.005);
    const double fine = round_trip_error(80, 0.0025);
    CHECK(coarse <= 2e-2);
    CHECK(fine / coarse >= 0.35);
    CHECK(fine / coarse <= 0.65);
}

TEST_CASE("explicit adjoint step: identity at rest, source accumulation, CFL guard") {
    Grid2D g(33);
    BasisSet basis(g, {1});
    ScalarField rho = random_field(g, 3);
    const VectorField rest = assemble_transport_velocity(basis, {0.0});

    ScalarField kept = step_adjoint_explicit(rho, rest, constant_field(g, 0.0), 0.01);
    CHECK(max_abs_diff(kept, rho) <= 1e-15);

    ScalarField fed = step_adjoint_explicit(rho, rest, constant_field(g, 2.0), 0.01);
    ScalarField expect = rho;
    expect.add_scaled(0.01 * 2.0, constant_field(g, 1.0));
    CHECK(max_abs_diff(fed, expect) <= 1e-15);

    const VectorField fast = assemble_transport_velocity(basis, {100.0});
    CHECK_THROWS_AS(step_adjoint_explicit(rho, fast, constant_field(g, 0.0), 0.05), std::invalid_argument);
}

TEST_CASE("kinetic source forms differ by the cross term of the velocity sum") {
    Grid2D g(65);
    BasisSet basis(g, {1, 2});
    const std::vector<double> u{1.0, 1.0};
    ScalarField joint = make_adjoint_source(basis, u, SourceForm::SquareOfSum);
    ScalarField split = make_adjoint_source(basis, u, SourceForm::SumOfSquares);
    for (int j : {8, 16, 40}) {
        for (int k : {16, 24, 56}) {
            const Vec2 p{g.x(j), g.x(k)};
            const Vec2 e1 = eval_basis(1, p), e2 = eval_basis(2, p);
            const double cross = e1.x * e2.x + e1.y * e2.y;
            CHECK(std::abs((joint(j, k) - split(j, k)) - cross) <= 1e-13);
        }
    }
    CHECK_THROWS_AS(make_adjoint_source(basis, {1.0}, SourceForm::SquareOfSum), std::invalid_argument);
}

TEST_CASE("adjoint sweep with lambda 0 carries only the kinetic budget in its mean") {
    Grid2D g(33);
    BasisSet basis(g, {1});
    MixNormContext mix(g);
    ScalarField theta0 = sample(g, [](double, double x2) { return std::sin(2.0 * M_PI * x2) + 1.0; });
    const double tau = 0.01, t_f = 0.2;
    const int steps = 20;
    ControlTrajectory u = ControlTrajectory::constant({1.0}, steps, tau);
    TrajectoryRecord rec = solve_state(theta0, basis, u);
    std::vector<ScalarField> rho = solve_adjoint(rec.final_theta(), 1.0, 0.0, basis, u, mix);
    REQUIRE(rho.size() == static_cast<size_t>(steps + 1));
    // d/dt of the adjoint mean is the mean kinetic source 0.5 * int |b_1|^2 = 1/4.
    CHECK(std::abs(mean(rho.front()) - (-t_f / 4.0)) <= 1e-9);
    CHECK(mean(rho.back()) == 0.0);
}

TEST_CASE("adjoint sweep without stirring freezes the terminal gradient field") {
    Grid2D g(33);
    BasisSet basis(g, {1, 2});
    MixNormContext mix(g);
    ScalarField theta0 = sample(g, [](double, double x2) { return std::sin(2.0 * M_PI * x2) + 1.0; });
    const double theta_bar = 1.0;
    ControlTrajectory u = ControlTrajectory::constant({0.0, 0.0}, 8, 0.01);
    TrajectoryRecord rec = solve_state(theta0, basis, u);
    std::vector<ScalarField> rho = solve_adjoint(rec.final_theta(), theta_bar, 1.0, basis, u, mix);

    ScalarField dev = rec.final_theta();
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) dev(j, k) -= theta_bar;
    ScalarField terminal = mix.mix_gradient(dev);
    terminal *= -2.0;
    CHECK(max_abs_diff(rho.back(), terminal) <= 1e-13);
    CHECK(max_abs_diff(rho.front(), terminal) <= 1e-12);
}

TEST_CASE("backward resolvent is the transpose of the forward one") {
    Grid2D g(33);
    BasisSet basis(g, {1, 2});
    AdvectionOperator A(assemble_transport_velocity(basis, {0.5, -0.3}));
    const double tau = 0.02;
    ScalarField y = random_field(g, 11), b = random_field(g, 12);

    const double lhs = inner(solve_resolvent(A, y, tau, -1.0), b);
    const double rhs = inner(y, solve_resolvent(A, b, tau, +1.0));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));

    // Composed over several steps the pairing stays put.
    ScalarField theta = b, rho = y;
    double before = inner(rho, theta);
    for (int k = 0; k < 10; ++k) theta = solve_resolvent(A, theta, tau, +1.0);
    for (int k = 0; k < 10; ++k) rho = solve_resolvent(A, rho, tau, -1.0);
    CHECK(std::abs(inner(y, theta) - inner(rho, b)) <= 1e-8 * (1.0 + std::abs(before)));
}

TEST_CASE("trajectory cost: zero control, uniform datum value, quadratic scaling") {
    Grid2D g(49);
    BasisSet basis(g, {1});
    ScalarField ones = constant_field(g, 1.0);

    ControlTrajectory zero = ControlTrajectory::constant({0.0}, 10, 0.1);
    TrajectoryRecord rec0 = solve_state(ones, basis, zero);
    CHECK(cost_of(rec0, basis, zero) == 0.0);

    ControlTrajectory unit = ControlTrajectory::constant({1.0}, 10, 0.1);
    TrajectoryRecord rec1 = solve_state(ones, basis, unit);
    CHECK(std::abs(cost_of(rec1, basis, unit) - 0.25) <= 1e-12);
    CHECK(std::abs(rec1.cost_cum.back() - cost_of(rec1, basis, unit)) <= 1e-15);

    ControlTrajectory twice = ControlTrajectory::constant({2.0}, 10, 0.1);
    CHECK(std::abs(cost_of(rec1, basis, twice) - 4.0 * cost_of(rec1, basis, unit)) <= 1e-12);

    ControlTrajectory wrong(2, 10, 0.1);
    CHECK_THROWS_AS(solve_state(ones, basis, wrong), std::invalid_argument);
}

} // TEST_SUITE
