/// @file grid.hpp
/// @brief Uniform tensor grid on the unit square, scalar/vector field storage,
///        trapezoidal and Simpson quadrature, difference operators, and the
///        cosine-basis transform shared by every solver in the library.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mixopt {

/** Uniform (n x n)-node grid on [0,1]^2 with spacing h = 1/(n-1).
 *  Node (j,k) sits at (j*h, k*h); boundary nodes lie on the walls. */
struct Grid2D {
    int n;      ///< nodes per side, at least 8
    double h;   ///< node spacing, 1/(n-1)

    explicit Grid2D(int nodes) : n(nodes), h(1.0 / (nodes - 1)) {
        if (nodes < 8) throw std::invalid_argument("Grid2D: need n >= 8, got n=" + std::to_string(nodes));
    }
    // Last node is pinned to 1.0 so wall coordinates are exact even when
    // (n-1)*h rounds away from 1.
    double x(int j) const { return j == n - 1 ? 1.0 : j * h; }
    int size() const { return n * n; }
    bool operator==(const Grid2D& o) const { return n == o.n; }
    bool operator!=(const Grid2D& o) const { return n != o.n; }
};

/** Nodal scalar field on a Grid2D. Storage is row-major with the first index
 *  along x1: entry (j,k) is value at (j*h, k*h). */
class ScalarField {
public:
    explicit ScalarField(Grid2D g) : grid_(g), v_(static_cast<size_t>(g.n) * g.n, 0.0) {}

    const Grid2D& grid() const { return grid_; }
    int n() const { return grid_.n; }

    double& operator()(int j, int k) { return v_[static_cast<size_t>(j) * grid_.n + k]; }
    double operator()(int j, int k) const { return v_[static_cast<size_t>(j) * grid_.n + k]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    size_t size() const { return v_.size(); }

    /// In-place axpy: this += a*f. Grids must match.
    ScalarField& add_scaled(double a, const ScalarField& f);
    ScalarField& operator*=(double a);
    ScalarField& operator+=(const ScalarField& f) { return add_scaled(1.0, f); }
    ScalarField& operator-=(const ScalarField& f) { return add_scaled(-1.0, f); }

private:
    Grid2D grid_;
    std::vector<double> v_;
};

/** Nodal velocity field (v1, v2) on a shared grid. */
struct VectorField {
    ScalarField vx;
    ScalarField vy;

    explicit VectorField(Grid2D g) : vx(g), vy(g) {}
    VectorField(ScalarField x, ScalarField y) : vx(std::move(x)), vy(std::move(y)) {
        if (vx.grid() != vy.grid()) throw std::invalid_argument("VectorField: component grids differ");
    }
    const Grid2D& grid() const { return vx.grid(); }
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double a, ScalarField f);

/// Fill from a callable f(x1, x2).
template <typename F>
ScalarField sample(Grid2D g, F&& f) {
    ScalarField out(g);
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k)
            out(j, k) = f(g.x(j), g.x(k));
    return out;
}

/** Integral over the unit square by the tensor trapezoidal rule
 *  (half weights on wall nodes, quarter weights at corners). */
double integrate(const ScalarField& f);

/** Integral by the tensor composite Simpson rule; requires an odd node count. */
double integrate_simpson(const ScalarField& f);

/// Spatial average; the domain has unit area so this equals integrate(f).
double mean(const ScalarField& f);

/// Trapezoid-weighted inner product <f,g> = integral of f*g.
double inner(const ScalarField& f, const ScalarField& g);

/// L2 norm under the trapezoid weights.
double l2_norm(const ScalarField& f);

/** Derivative along x1: centered in the interior, second-order one-sided on
 *  the walls. Used for norms and quadrature-grade gradients. */
ScalarField diff_x(const ScalarField& f);

/// Derivative along x2, same stencils as diff_x.
ScalarField diff_y(const ScalarField& f);

/** H1 norm sqrt(||f||_L2^2 + ||grad f||_L2^2) with the accurate one-sided
 *  boundary stencils of diff_x / diff_y. */
double h1_norm(const ScalarField& f);

/** Derivative along x1 with a first-order one-sided closure at the walls.
 *  With trapezoid weights W this operator satisfies the summation-by-parts
 *  identity <f, D g>_W + <D f, g>_W = boundary flux exactly, which is what
 *  makes the advection stencil conserve mass and L2 to solver precision.
 *  Less accurate at the walls than diff_x; used only inside transport. */
ScalarField sbp_diff_x(const ScalarField& f);

/// Derivative along x2 with the summation-by-parts closure of sbp_diff_x.
ScalarField sbp_diff_y(const ScalarField& f);

/** Expansion of nodal fields in the Neumann cosine basis
 *  phi_jk(x) = cos(j pi x1) cos(k pi x2), 0 <= j,k <= n-1.
 *
 *  Nodes x_j = j/(n-1) are exactly the closed Chebyshev-type cosine nodes, so
 *  the forward map is a discrete cosine transform: the coefficient sum uses
 *  half weights on the first/last sample and per-mode normalizers gamma_k
 *  (gamma = n-1 for the constant and top mode, (n-1)/2 otherwise).  Round
 *  trips reconstruct to machine precision.  Implemented as two dense
 *  matrix applications per direction; at the default resolution this is a
 *  few milliseconds and keeps the dependency surface empty. */
class CosineTransform {
public:
    explicit CosineTransform(Grid2D g);

    const Grid2D& grid() const { return grid_; }

    /** Forward transform. Coefficient (j,k) multiplies cos(j pi x1) cos(k pi x2)
     *  and is stored at index j*n + k of the result. */
    std::vector<double> forward(const ScalarField& f) const;

    /// Inverse transform: evaluate the cosine series at the nodes.
    ScalarField inverse(const std::vector<double>& coeff) const;

private:
    Grid2D grid_;
    std::vector<double> cosmat_;   // C[k*n+j] = cos(pi k j / (n-1)), symmetric
    std::vector<double> fwdmat_;   // forward factor: C with sample weights / gamma_k
    void apply_pair(const std::vector<double>& m, const double* in, double* out) const;
};

/** Write a field snapshot: first line `# n=<n> t=<time> field=<name>`, then
 *  n comma-separated rows, row index along x1. Values are emitted with 17
 *  significant digits so that re-runs are byte-identical. */
void write_snapshot(const std::string& path, const ScalarField& f, double t, const std::string& name);

struct Snapshot {
    ScalarField field;
    double t;
    std::string name;
};

/// Read a snapshot written by write_snapshot. Throws on malformed input.
Snapshot read_snapshot(const std::string& path);

} // namespace mixopt
