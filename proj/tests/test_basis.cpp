#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixopt/basis.hpp"
#include "mixopt/grid.hpp"
#include "oracles.hpp"

using namespace mixopt;

TEST_SUITE_BEGIN("basis");

TEST_CASE("pointwise velocity values") {
    Vec2 v = eval_basis(1, {0.5, 0.5});
    CHECK(std::abs(v.x) <= 1e-15);
    CHECK(std::abs(v.y) <= 1e-15);

    v = eval_basis(1, {0.25, 0.5});
    CHECK(v.x == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(v.y == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));

    // Both Hamiltonian normalizations generate the same unit-amplitude field.
    Vec2 s = eval_basis(3, {0.13, 0.41}, true);
    Vec2 u = eval_basis(3, {0.13, 0.41}, false);
    CHECK(s.x == u.x);
    CHECK(s.y == u.y);

    CHECK_THROWS(eval_basis(0, {0.5, 0.5}));
    CHECK_THROWS(eval_basis(-2, {0.5, 0.5}));
}

TEST_CASE("walls are impermeable: normal component vanishes exactly") {
    Grid2D g(65);
    for (int i : {1, 2, 3, 4}) {
        BasisSet basis(g, {i});
        for (int k = 0; k < g.n; ++k) {
            CHECK(basis.bx(0)(0, k) == 0.0);
            CHECK(basis.bx(0)(g.n - 1, k) == 0.0);
            CHECK(basis.by(0)(k, 0) == 0.0);
            CHECK(basis.by(0)(k, g.n - 1) == 0.0);
            CHECK(basis.qx(0)(0, k) == 0.0);
            CHECK(basis.qx(0)(g.n - 1, k) == 0.0);
            CHECK(basis.qy(0)(k, 0) == 0.0);
            CHECK(basis.qy(0)(k, g.n - 1) == 0.0);
        }
    }
}

TEST_CASE("kinetic normalization: integral of |b_i|^2 is one half") {
    Grid2D g(65);
    for (int i : {1, 2, 3, 4}) {
        BasisSet basis(g, {i});
        ScalarField sq(g);
        for (int j = 0; j < g.n; ++j)
            for (int k = 0; k < g.n; ++k) {
                const double bx = basis.bx(0)(j, k);
                const double by = basis.by(0)(j, k);
                sq(j, k) = bx * bx + by * by;
            }
        CHECK(integrate(sq) == doctest::Approx(0.5).epsilon(1e-13));
    }
}

TEST_CASE("construction validates the index list") {
    Grid2D g(17);
    CHECK_THROWS(BasisSet(g, {}));
    CHECK_THROWS(BasisSet(g, {1, 1}));
    CHECK_THROWS(BasisSet(g, {0, 2}));
    CHECK_THROWS(BasisSet(g, {-1}));
    CHECK_NOTHROW(BasisSet(g, {2, 1, 4}));
}

TEST_CASE("cached samples match pointwise evaluation") {
    Grid2D g(33);
    BasisSet basis(g, {1, 3});
    for (int slot : {0, 1}) {
        const int i = basis.indices()[slot];
        for (int j : {0, 7, 16, 32})
            for (int k : {0, 5, 20, 32}) {
                Vec2 v = eval_basis(i, {g.x(j), g.x(k)});
                CHECK(basis.bx(slot)(j, k) == doctest::Approx(v.x).epsilon(1e-15));
                CHECK(basis.by(slot)(j, k) == doctest::Approx(v.y).epsilon(1e-15));
            }
    }
}

TEST_CASE("discrete-curl samples are exactly divergence free") {
    Grid2D g(65);
    for (int i : {1, 2, 3, 4}) {
        BasisSet basis(g, {i});
        ScalarField div = sbp_diff_x(basis.qx(0));
        div += sbp_diff_y(basis.qy(0));
        double emax = 0.0;
        for (int j = 0; j < g.n; ++j)
            for (int k = 0; k < g.n; ++k) emax = std::max(emax, std::abs(div(j, k)));
        CHECK(emax <= 1e-11);
    }
}

TEST_CASE("discrete-curl samples converge to the analytic velocity at second order") {
    for (int i : {1, 2}) {
        std::vector<double> errs;
        for (int n : {33, 65, 129}) {
            Grid2D g(n);
            BasisSet basis(g, {i});
            double emax = 0.0;
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    emax = std::max(emax, std::abs(basis.qx(0)(j, k) - basis.bx(0)(j, k)));
                    emax = std::max(emax, std::abs(basis.qy(0)(j, k) - basis.by(0)(j, k)));
                }
            errs.push_back(emax);
        }
        CHECK(std::log2(errs[0] / errs[1]) == doctest::Approx(2.0).epsilon(0.2));
        CHECK(std::log2(errs[1] / errs[2]) == doctest::Approx(2.0).epsilon(0.2));
    }
}

TEST_CASE("centered divergence of the pointwise samples decays at second order") {
    // In the interior the centered stencil errors of the two components cancel
    // exactly; the max norm is set by the one-sided wall closures and scales
    // as h^2 with a constant that grows like (i pi)^3.
    for (int i : {1, 2, 3, 4}) {
        std::vector<double> errs;
        for (int n : {33, 65, 129}) {
            Grid2D g(n);
            BasisSet basis(g, {i});
            ScalarField div = diff_x(basis.bx(0));
            div += diff_y(basis.by(0));
            double emax = 0.0;
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) emax = std::max(emax, std::abs(div(j, k)));
            errs.push_back(emax);
        }
        CHECK(std::log2(errs[0] / errs[1]) == doctest::Approx(2.0).epsilon(0.15));
        CHECK(std::log2(errs[1] / errs[2]) == doctest::Approx(2.0).epsilon(0.15));
        const double c = std::pow(i * M_PI, 3);
        CHECK(errs.back() <= c * Grid2D(129).h * Grid2D(129).h);
    }
}

TEST_CASE("velocity assembly is linear and validates the coefficient count") {
    Grid2D g(33);
    BasisSet basis(g, {1, 2});
    CHECK_THROWS(assemble_velocity(basis, {1.0}));

    VectorField zero = assemble_velocity(basis, {0.0, 0.0});
    CHECK(l2_norm(zero.vx) == 0.0);
    CHECK(l2_norm(zero.vy) == 0.0);

    VectorField one_hot = assemble_velocity(basis, {0.0, 1.0});
    CHECK(one_hot.vx(5, 9) == basis.bx(1)(5, 9));

    VectorField both = assemble_velocity(basis, {1.0, 1.0});
    for (auto [j, k] : {std::pair{3, 4}, {10, 20}, {17, 2}, {30, 30}, {8, 8}}) {
        Vec2 v1 = eval_basis(1, {g.x(j), g.x(k)});
        Vec2 v2 = eval_basis(2, {g.x(j), g.x(k)});
        CHECK(both.vx(j, k) == doctest::Approx(v1.x + v2.x).epsilon(1e-14));
        CHECK(both.vy(j, k) == doctest::Approx(v1.y + v2.y).epsilon(1e-14));
    }
}

TEST_CASE("complete elliptic integral against adaptive quadrature") {
    CHECK(elliptic_K(0.0) == doctest::Approx(M_PI / 2.0).epsilon(1e-15));
    for (double k : {0.1, 0.5, 1.0 / std::sqrt(2.0), 0.9, 0.99}) {
        CHECK(elliptic_K(k) == doctest::Approx(oracles::elliptic_K(k)).epsilon(1e-10));
    }
    // Logarithmic blow-up toward the singular end.
    const double k = 0.9999;
    const double kp = std::sqrt((1.0 - k) * (1.0 + k));
    CHECK(std::abs(elliptic_K(k) - std::log(4.0 / kp)) <= 5e-4);
    CHECK_THROWS(elliptic_K(1.0));
    CHECK_THROWS(elliptic_K(-0.1));
}

TEST_CASE("complement-form K agrees with the direct form") {
    for (double k : {0.0, 0.3, 0.8, 0.999}) {
        const double kp = std::sqrt((1.0 - k) * (1.0 + k));
        CHECK(elliptic_K_from_complement(kp) == doctest::Approx(elliptic_K(k)).epsilon(1e-12));
    }
    CHECK_THROWS(elliptic_K_from_complement(0.0));
    CHECK_THROWS(elliptic_K_from_complement(1.5));
}

TEST_CASE("orbit period matches direct return-time integration") {
    struct Case {
        int N;
        double I;
    };
    for (Case c : {Case{1, 0.25}, {1, 0.1}, {2, 0.1}, {3, 0.05}}) {
        const double formula = orbit_period(c.N, c.I, false);
        const double ode = oracles::orbit_return_time(c.N, c.I);
        CHECK(formula == doctest::Approx(ode).epsilon(1e-6));
    }
}

TEST_CASE("scaled and unscaled periods differ by the Hamiltonian amplitude") {
    for (int N : {1, 2, 4}) {
        const double I = 0.2 / N;
        CHECK(orbit_period(N, I, true) ==
              doctest::Approx(N * M_PI * orbit_period(N, I, false)).epsilon(1e-14));
    }
}

TEST_CASE("center limit and separatrix asymptote") {
    for (int N : {1, 2, 3}) {
        CHECK(orbit_period_center_limit(N, false) == doctest::Approx(2.0 / (N * N * M_PI)).epsilon(1e-15));
        CHECK(orbit_period_center_limit(N, true) == doctest::Approx(2.0 / N).epsilon(1e-15));
        const double near_center = (1.0 - 1e-8) * 0.5 / N;
        CHECK(orbit_period(N, near_center, false) ==
              doctest::Approx(orbit_period_center_limit(N, false)).epsilon(1e-8));
        const double tiny = 1e-6;
        CHECK(orbit_period(N, tiny / N, false) / orbit_period_log_asymptote(N, tiny / N, false) ==
              doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("orbit period is strictly decreasing in the level parameter") {
    for (int N : {1, 3}) {
        double prev = orbit_period(N, 0.02 / N, false);
        for (double f : {0.1, 0.2, 0.3, 0.4, 0.49}) {
            const double cur = orbit_period(N, f / N, false);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("orbit period rejects levels outside the open cell range") {
    CHECK_THROWS(orbit_period(1, 0.0, false));
    CHECK_THROWS(orbit_period(1, 0.5, false));
    CHECK_THROWS(orbit_period(2, 0.3, false));
    CHECK_THROWS(orbit_period(0, 0.1, false));
}

TEST_SUITE_END();
