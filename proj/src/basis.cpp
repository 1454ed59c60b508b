#include "mixopt/basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace mixopt {

namespace {

// sin(pi t) and cos(pi t) with argument reduction to |r| <= 1/2, so that
// sin(pi t) is an exact zero whenever t is an integer. Every wall node sits
// at such a zero for every basis frequency, which makes the no-flux identity
// b_i . n = 0 exact rather than merely O(eps).
double sin_pi(double t) {
    const double k = std::nearbyint(t);
    const double r = t - k;
    if (r == 0.0) return 0.0;
    const double s = std::sin(M_PI * r);
    return std::fmod(k, 2.0) == 0.0 ? s : -s;
}

double cos_pi(double t) {
    const double k = std::nearbyint(t);
    const double r = t - k;
    const double c = std::cos(M_PI * r);
    return std::fmod(k, 2.0) == 0.0 ? c : -c;
}

} // namespace

Vec2 eval_basis(int i, Vec2 x, bool /*scaled*/) {
    if (i <= 0) throw std::invalid_argument("eval_basis: index must be positive, got " + std::to_string(i));
    return {-sin_pi(i * x.x) * cos_pi(i * x.y), cos_pi(i * x.x) * sin_pi(i * x.y)};
}

BasisSet::BasisSet(Grid2D grid, std::vector<int> indices, bool scaled)
    : grid_(grid), indices_(std::move(indices)), scaled_(scaled) {
    if (indices_.empty()) throw std::invalid_argument("BasisSet: need at least one index");
    std::set<int> seen;
    for (int i : indices_) {
        if (i <= 0) throw std::invalid_argument("BasisSet: indices must be positive, got " + std::to_string(i));
        if (!seen.insert(i).second) throw std::invalid_argument("BasisSet: duplicate index " + std::to_string(i));
    }
    bx_.reserve(indices_.size());
    by_.reserve(indices_.size());
    psi_.reserve(indices_.size());
    qx_.reserve(indices_.size());
    qy_.reserve(indices_.size());
    for (int i : indices_) {
        const double a = i * M_PI;
        bx_.push_back(sample(grid_, [i](double x1, double x2) { return -sin_pi(i * x1) * cos_pi(i * x2); }));
        by_.push_back(sample(grid_, [i](double x1, double x2) { return cos_pi(i * x1) * sin_pi(i * x2); }));
        // Streamfunction with unit-amplitude velocity: psi = sin sin / (i pi).
        psi_.push_back(sample(grid_, [i, a](double x1, double x2) { return sin_pi(i * x1) * sin_pi(i * x2) / a; }));
        ScalarField qx = sbp_diff_y(psi_.back());
        qx *= -1.0;
        qx_.push_back(std::move(qx));
        qy_.push_back(sbp_diff_x(psi_.back()));
    }
}

namespace {

VectorField combine(const BasisSet& basis, const std::vector<double>& u, bool transport) {
    if (u.size() != static_cast<size_t>(basis.count()))
        throw std::invalid_argument("assemble_velocity: got " + std::to_string(u.size()) +
                                    " coefficients for " + std::to_string(basis.count()) + " basis fields");
    VectorField v(basis.grid());
    for (int s = 0; s < basis.count(); ++s) {
        v.vx.add_scaled(u[s], transport ? basis.qx(s) : basis.bx(s));
        v.vy.add_scaled(u[s], transport ? basis.qy(s) : basis.by(s));
    }
    return v;
}

} // namespace

VectorField assemble_velocity(const BasisSet& basis, const std::vector<double>& u) {
    return combine(basis, u, false);
}

VectorField assemble_transport_velocity(const BasisSet& basis, const std::vector<double>& u) {
    return combine(basis, u, true);
}

double elliptic_K(double k) {
    if (!(k >= 0.0) || k >= 1.0)
        throw std::invalid_argument("elliptic_K: modulus must satisfy 0 <= k < 1, got " + std::to_string(k));
    return elliptic_K_from_complement(std::sqrt((1.0 - k) * (1.0 + k)));
}

double elliptic_K_from_complement(double kp) {
    if (!(kp > 0.0) || kp > 1.0)
        throw std::invalid_argument("elliptic_K_from_complement: need 0 < k' <= 1, got " + std::to_string(kp));
    // K = pi / (2 AGM(1, k')); the iteration converges quadratically.
    double a = 1.0, b = kp;
    for (int it = 0; it < 64 && std::abs(a - b) > 1e-17 * a; ++it) {
        const double am = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = am;
    }
    return M_PI / (2.0 * a);
}

double orbit_period(int N, double I, bool scaled) {
    if (N <= 0) throw std::invalid_argument("orbit_period: N must be positive");
    if (!(I > 0.0) || !(I < 0.5 / N))
        throw std::invalid_argument("orbit_period: need 0 < I < 1/(2N), got I=" + std::to_string(I));
    // Modulus k = cos(N pi I); evaluate K through the complement sin(N pi I)
    // so the separatrix limit I -> 0 keeps full precision.
    const double kp = std::sin(N * M_PI * I);
    const double K = elliptic_K_from_complement(kp);
    const double base = 4.0 / (N * N * M_PI * M_PI) * K;
    return scaled ? N * M_PI * base : base;
}

double orbit_period_center_limit(int N, bool scaled) {
    if (N <= 0) throw std::invalid_argument("orbit_period_center_limit: N must be positive");
    const double base = 2.0 / (N * N * M_PI);
    return scaled ? N * M_PI * base : base;
}

double orbit_period_log_asymptote(int N, double I, bool scaled) {
    if (N <= 0) throw std::invalid_argument("orbit_period_log_asymptote: N must be positive");
    if (!(I > 0.0)) throw std::invalid_argument("orbit_period_log_asymptote: need I > 0");
    const double base = 4.0 / (N * N * M_PI * M_PI) * std::log(4.0 / (N * M_PI * I));
    return scaled ? N * M_PI * base : base;
}

} // namespace mixopt
