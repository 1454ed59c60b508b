#include "mixopt/grid.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

namespace mixopt {

namespace {

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* who) {
    if (a.grid() != b.grid())
        throw std::invalid_argument(std::string(who) + ": fields live on different grids");
}

// 1D trapezoid weight (without the h factor).
inline double trap_w(int j, int n) { return (j == 0 || j == n - 1) ? 0.5 : 1.0; }

} // namespace

ScalarField& ScalarField::add_scaled(double a, const ScalarField& f) {
    require_same_grid(*this, f, "ScalarField::add_scaled");
    const double* src = f.data();
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += a * src[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double a) {
    for (double& x : v_) x *= a;
    return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { a += b; return a; }
ScalarField operator-(ScalarField a, const ScalarField& b) { a -= b; return a; }
ScalarField operator*(double a, ScalarField f) { f *= a; return f; }

double integrate(const ScalarField& f) {
    const int n = f.n();
    const double h = f.grid().h;
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        const double wj = trap_w(j, n);
        double row = 0.0;
        for (int k = 0; k < n; ++k) row += trap_w(k, n) * f(j, k);
        total += wj * row;
    }
    return total * h * h;
}

double integrate_simpson(const ScalarField& f) {
    const int n = f.n();
    if (n % 2 == 0)
        throw std::invalid_argument("integrate_simpson: composite Simpson needs an odd node count, got n=" + std::to_string(n));
    auto w = [n](int j) -> double {
        if (j == 0 || j == n - 1) return 1.0;
        return (j % 2 == 1) ? 4.0 : 2.0;
    };
    const double h = f.grid().h;
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        double row = 0.0;
        for (int k = 0; k < n; ++k) row += w(k) * f(j, k);
        total += w(j) * row;
    }
    return total * h * h / 9.0;
}

double mean(const ScalarField& f) { return integrate(f); }

double inner(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f, g, "inner");
    const int n = f.n();
    const double h = f.grid().h;
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        const double wj = trap_w(j, n);
        double row = 0.0;
        for (int k = 0; k < n; ++k) row += trap_w(k, n) * f(j, k) * g(j, k);
        total += wj * row;
    }
    return total * h * h;
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }

ScalarField diff_x(const ScalarField& f) {
    const int n = f.n();
    const double h = f.grid().h;
    ScalarField d(f.grid());
    for (int k = 0; k < n; ++k) {
        d(0, k) = (-1.5 * f(0, k) + 2.0 * f(1, k) - 0.5 * f(2, k)) / h;
        d(n - 1, k) = (1.5 * f(n - 1, k) - 2.0 * f(n - 2, k) + 0.5 * f(n - 3, k)) / h;
    }
    for (int j = 1; j < n - 1; ++j)
        for (int k = 0; k < n; ++k)
            d(j, k) = (f(j + 1, k) - f(j - 1, k)) / (2.0 * h);
    return d;
}

ScalarField diff_y(const ScalarField& f) {
    const int n = f.n();
    const double h = f.grid().h;
    ScalarField d(f.grid());
    for (int j = 0; j < n; ++j) {
        d(j, 0) = (-1.5 * f(j, 0) + 2.0 * f(j, 1) - 0.5 * f(j, 2)) / h;
        d(j, n - 1) = (1.5 * f(j, n - 1) - 2.0 * f(j, n - 2) + 0.5 * f(j, n - 3)) / h;
        for (int k = 1; k < n - 1; ++k)
            d(j, k) = (f(j, k + 1) - f(j, k - 1)) / (2.0 * h);
    }
    return d;
}

double h1_norm(const ScalarField& f) {
    const ScalarField dx = diff_x(f);
    const ScalarField dy = diff_y(f);
    return std::sqrt(inner(f, f) + inner(dx, dx) + inner(dy, dy));
}

ScalarField sbp_diff_x(const ScalarField& f) {
    const int n = f.n();
    const double h = f.grid().h;
    ScalarField d(f.grid());
    for (int k = 0; k < n; ++k) {
        d(0, k) = (f(1, k) - f(0, k)) / h;
        d(n - 1, k) = (f(n - 1, k) - f(n - 2, k)) / h;
    }
    for (int j = 1; j < n - 1; ++j)
        for (int k = 0; k < n; ++k)
            d(j, k) = (f(j + 1, k) - f(j - 1, k)) / (2.0 * h);
    return d;
}

ScalarField sbp_diff_y(const ScalarField& f) {
    const int n = f.n();
    const double h = f.grid().h;
    ScalarField d(f.grid());
    for (int j = 0; j < n; ++j) {
        d(j, 0) = (f(j, 1) - f(j, 0)) / h;
        d(j, n - 1) = (f(j, n - 1) - f(j, n - 2)) / h;
        for (int k = 1; k < n - 1; ++k)
            d(j, k) = (f(j, k + 1) - f(j, k - 1)) / (2.0 * h);
    }
    return d;
}

CosineTransform::CosineTransform(Grid2D g) : grid_(g) {
    const int n = g.n;
    const int M = n - 1;
    cosmat_.resize(static_cast<size_t>(n) * n);
    fwdmat_.resize(static_cast<size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
        const double gamma = (k == 0 || k == M) ? M : M / 2.0;
        for (int j = 0; j < n; ++j) {
            // Reduce k*j mod 2M before evaluating: keeps the argument small so
            // the matrix is exactly symmetric and the entries fully accurate.
            const long r = static_cast<long>(k) * j % (2L * M);
            const double c = std::cos(M_PI * static_cast<double>(r) / M);
            cosmat_[static_cast<size_t>(k) * n + j] = c;
            const double wj = (j == 0 || j == M) ? 0.5 : 1.0;
            fwdmat_[static_cast<size_t>(k) * n + j] = c * wj / gamma;
        }
    }
}

// out = m * in * m^T for n x n row-major matrices (apply m along both axes).
void CosineTransform::apply_pair(const std::vector<double>& m, const double* in, double* out) const {
    const int n = grid_.n;
    std::vector<double> tmp(static_cast<size_t>(n) * n, 0.0);
    // tmp = m * in  (contract over the x1 index)
    for (int k = 0; k < n; ++k) {
        double* trow = &tmp[static_cast<size_t>(k) * n];
        for (int j = 0; j < n; ++j) {
            const double c = m[static_cast<size_t>(k) * n + j];
            const double* irow = &in[static_cast<size_t>(j) * n];
            for (int q = 0; q < n; ++q) trow[q] += c * irow[q];
        }
    }
    // out = tmp * m^T (contract over the x2 index)
    for (int j = 0; j < n; ++j) {
        const double* trow = &tmp[static_cast<size_t>(j) * n];
        double* orow = &out[static_cast<size_t>(j) * n];
        for (int q = 0; q < n; ++q) orow[q] = 0.0;
        for (int q = 0; q < n; ++q) {
            const double* mrow = &m[static_cast<size_t>(q) * n];
            double acc = 0.0;
            for (int s = 0; s < n; ++s) acc += trow[s] * mrow[s];
            orow[q] = acc;
        }
    }
}

std::vector<double> CosineTransform::forward(const ScalarField& f) const {
    if (f.grid() != grid_) throw std::invalid_argument("CosineTransform::forward: grid mismatch");
    std::vector<double> c(static_cast<size_t>(grid_.n) * grid_.n);
    apply_pair(fwdmat_, f.data(), c.data());
    return c;
}

ScalarField CosineTransform::inverse(const std::vector<double>& coeff) const {
    if (coeff.size() != static_cast<size_t>(grid_.n) * grid_.n)
        throw std::invalid_argument("CosineTransform::inverse: coefficient array has wrong size");
    ScalarField f(grid_);
    apply_pair(cosmat_, coeff.data(), f.data());
    return f;
}

void write_snapshot(const std::string& path, const ScalarField& f, double t, const std::string& name) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_snapshot: cannot open '" + path + "': " + std::strerror(errno));
    const int n = f.n();
    std::fprintf(fp, "# n=%d t=%.17g field=%s\n", n, t, name.c_str());
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k)
            std::fprintf(fp, k ? ",%.17g" : "%.17g", f(j, k));
        std::fputc('\n', fp);
    }
    if (std::fclose(fp) != 0) throw std::runtime_error("write_snapshot: write to '" + path + "' failed");
}

Snapshot read_snapshot(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "r");
    if (!fp) throw std::runtime_error("read_snapshot: cannot open '" + path + "': " + std::strerror(errno));
    int n = 0;
    double t = 0.0;
    char namebuf[256] = {0};
    if (std::fscanf(fp, "# n=%d t=%lg field=%255s\n", &n, &t, namebuf) != 3 || n < 8) {
        std::fclose(fp);
        throw std::runtime_error("read_snapshot: malformed header in '" + path + "'");
    }
    Snapshot snap{ScalarField(Grid2D(n)), t, namebuf};
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            double val = 0.0;
            const int rc = (k == 0) ? std::fscanf(fp, "%lg", &val) : std::fscanf(fp, ",%lg", &val);
            if (rc != 1) {
                std::fclose(fp);
                throw std::runtime_error("read_snapshot: bad value at row " + std::to_string(j) +
                                         " col " + std::to_string(k) + " in '" + path + "'");
            }
            snap.field(j, k) = val;
        }
    }
    std::fclose(fp);
    return snap;
}

} // namespace mixopt
