/// @file basis.hpp
/// @brief Cellular stirring fields b_i on the unit square, their streamfunction
///        samples, and the orbit-period / elliptic-integral primitives.

#pragma once

#include <vector>

#include "mixopt/grid.hpp"

namespace mixopt {

struct Vec2 {
    double x;
    double y;
};

/** Velocity of the i-th cellular flow at a point:
 *      b_i(x) = (-sin(i pi x1) cos(i pi x2), cos(i pi x1) sin(i pi x2)).
 *  The field is tangential on the walls and divergence free, and its kinetic
 *  normalization is independent of i: the integral of |b_i|^2 is 1/2.
 *
 *  The `scaled` flag selects which Hamiltonian normalization the *period*
 *  formulas refer to; both normalizations generate this same unit-amplitude
 *  velocity, so the flag does not change the returned value. */
Vec2 eval_basis(int i, Vec2 x, bool scaled = false);

/** Cellular basis sampled once on a grid and cached.
 *
 *  Two sample families are kept per index:
 *    - bx/by: pointwise values of b_i, used for quadratures (cost integrand,
 *      the Gram matrix M, adjoint sources);
 *    - qx/qy: the discrete curl of the sampled streamfunction psi_i
 *      (qx = -D psi / dx2, qy = D psi / dx1 with the summation-by-parts
 *      stencils). These satisfy the *discrete* divergence-free and no-flux
 *      identities exactly, which is what the transport stepper needs to
 *      conserve mass to solver precision. They agree with bx/by to O(h^2). */
class BasisSet {
public:
    BasisSet(Grid2D grid, std::vector<int> indices, bool scaled = false);

    const Grid2D& grid() const { return grid_; }
    const std::vector<int>& indices() const { return indices_; }
    int count() const { return static_cast<int>(indices_.size()); }
    bool scaled() const { return scaled_; }

    const ScalarField& bx(int slot) const { return bx_[slot]; }
    const ScalarField& by(int slot) const { return by_[slot]; }
    const ScalarField& qx(int slot) const { return qx_[slot]; }
    const ScalarField& qy(int slot) const { return qy_[slot]; }
    const ScalarField& psi(int slot) const { return psi_[slot]; }

private:
    Grid2D grid_;
    std::vector<int> indices_;
    bool scaled_;
    std::vector<ScalarField> bx_, by_, qx_, qy_, psi_;
};

/** v = sum_i u_i b_i from the pointwise samples. Tangential on the walls. */
VectorField assemble_velocity(const BasisSet& basis, const std::vector<double>& u);

/** Same combination built from the discrete-curl samples qx/qy; this is the
 *  advecting field handed to the transport stepper. */
VectorField assemble_transport_velocity(const BasisSet& basis, const std::vector<double>& u);

/** Complete elliptic integral of the first kind,
 *      K(k) = integral_0^{pi/2} dt / sqrt(1 - k^2 sin^2 t),
 *  by the arithmetic-geometric mean iteration, accurate to ~1e-15 relative.
 *  Requires 0 <= k < 1. */
double elliptic_K(double k);

/** K computed from the complementary modulus k' = sqrt(1-k^2):
 *  K = pi / (2 AGM(1, k')). Preferred near k -> 1 where k itself would lose
 *  digits to cancellation. Requires 0 < kp <= 1. */
double elliptic_K_from_complement(double kp);

/** Period of the closed orbit of the i=N cellular flow through the point
 *  (1/(2N), I), 0 < I < 1/(2N).
 *
 *  With the unscaled Hamiltonian sin(N pi x1) sin(N pi x2) (whose velocity is
 *  N pi times b_N) the period is (4/(N^2 pi^2)) K(cos(N pi I)); with the
 *  scaled Hamiltonian (1/(N pi)) sin sin (whose velocity is b_N itself) it is
 *  N pi times longer, (4/(N pi)) K(cos(N pi I)).  The modulus is evaluated
 *  through the complement sin(N pi I), which is exact near the separatrix. */
double orbit_period(int N, double I, bool scaled = false);

/** Limiting period at the cell center I -> 1/(2N): 2/(N^2 pi) unscaled,
 *  2/N scaled. */
double orbit_period_center_limit(int N, bool scaled = false);

/** Small-I logarithmic model of the period near the separatrix:
 *  (4/(N^2 pi^2)) log(4/(N pi I)) unscaled, N pi times that scaled.
 *  orbit_period / this ratio tends to 1 as I -> 0. */
double orbit_period_log_asymptote(int N, double I, bool scaled = false);

} // namespace mixopt
