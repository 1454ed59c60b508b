#include "oracles.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace oracles {

namespace {

// 4-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 4> kGx = {-0.8611363115940526, -0.3399810435848563,
                                       0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGw = {0.3478548451374538, 0.6521451548625461,
                                      0.6521451548625461, 0.3478548451374538};

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) throw std::runtime_error("adaptive Simpson: recursion limit");
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

struct Vec {
    double x, y;
};

Vec hamiltonian_rhs(int N, const Vec& p) {
    const double a = N * M_PI;
    return {-a * std::sin(a * p.x) * std::cos(a * p.y), a * std::cos(a * p.x) * std::sin(a * p.y)};
}

Vec rk4_step(int N, const Vec& p, double dt) {
    const Vec k1 = hamiltonian_rhs(N, p);
    const Vec k2 = hamiltonian_rhs(N, {p.x + 0.5 * dt * k1.x, p.y + 0.5 * dt * k1.y});
    const Vec k3 = hamiltonian_rhs(N, {p.x + 0.5 * dt * k2.x, p.y + 0.5 * dt * k2.y});
    const Vec k4 = hamiltonian_rhs(N, {p.x + dt * k3.x, p.y + dt * k3.y});
    return {p.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            p.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y)};
}

} // namespace

double quad2d(const std::function<double(double, double)>& f, int panels) {
    const double w = 1.0 / panels;
    double total = 0.0;
    for (int px = 0; px < panels; ++px) {
        for (int py = 0; py < panels; ++py) {
            const double cx = (px + 0.5) * w;
            const double cy = (py + 0.5) * w;
            double cell = 0.0;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    cell += kGw[a] * kGw[b] * f(cx + 0.5 * w * kGx[a], cy + 0.5 * w * kGx[b]);
            total += cell * 0.25 * w * w;
        }
    }
    return total;
}

double elliptic_K(double k, double rel_tol) {
    if (!(k >= 0.0 && k < 1.0)) throw std::runtime_error("elliptic_K oracle: k outside [0,1)");
    const double k2 = k * k;
    auto f = [k2](double phi) {
        const double s = std::sin(phi);
        return 1.0 / std::sqrt(1.0 - k2 * s * s);
    };
    const double a = 0.0;
    const double b = M_PI / 2.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, rel_tol * std::abs(whole), 48);
}

double orbit_return_time(int N, double I, int steps_per_period) {
    if (!(I > 0.0 && I < 0.5 / N)) throw std::runtime_error("orbit oracle: I outside (0, 1/(2N))");
    const double section = 0.5 / N;
    // Rough period guess from the center limit; only sets the step size, so it
    // cannot bias the measured return time.
    const double guess = 4.0 * std::log(8.0 / (N * M_PI * I)) / (N * N * M_PI * M_PI);
    const double dt = guess / steps_per_period;
    Vec p{section, I};
    double t = 0.0;
    double s_prev = 0.0;  // signed distance from the section, starts on it
    const long max_steps = 50L * steps_per_period;
    for (long step = 0; step < max_steps; ++step) {
        const Vec q = rk4_step(N, p, dt);
        const double s_new = q.x - section;
        // Full loop completed: crossing the section leftward in the lower half
        // of the cell (the start point's half), excluding the departure.
        if (step > 10 && s_prev > 0.0 && s_new <= 0.0 && q.y < section) {
            double lo = 0.0, hi = dt;
            Vec base = p;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const Vec m = rk4_step(N, base, mid);
                if (m.x - section > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            return t + 0.5 * (lo + hi);
        }
        s_prev = s_new;
        p = q;
        t += dt;
    }
    throw std::runtime_error("orbit oracle: no return within step budget");
}

} // namespace oracles
