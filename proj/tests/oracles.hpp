// Independent reference computations used to check library results. Each
// oracle is built from a different method than the code under test: tensor
// Gauss-Legendre panels instead of trapezoid sums, adaptive Simpson instead
// of the AGM, and Runge-Kutta return-time integration instead of the
// closed-form period.
#pragma once

#include <functional>

namespace oracles {

/// Integral of f over the unit square by composite 4-point Gauss-Legendre
/// panels (panels x panels per direction); spectral-grade accuracy for
/// smooth integrands at modest panel counts.
double quad2d(const std::function<double(double, double)>& f, int panels = 64);

/// Complete elliptic integral of the first kind by adaptive Simpson
/// quadrature of the defining integral; rel_tol governs the refinement.
double elliptic_K(double k, double rel_tol = 1e-12);

/// Return time of the closed orbit of dx/dt = perp-grad[ sin(N pi x1) sin(N pi x2) ]
/// through the point (1/(2N), I): fixed-step RK4 with bisection refinement of
/// the section crossing. Accurate to ~1e-9 relative at the default step count.
double orbit_return_time(int N, double I, int steps_per_period = 40000);

} // namespace oracles
