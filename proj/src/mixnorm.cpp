#include "mixopt/mixnorm.hpp"

#include <cmath>
#include <stdexcept>

namespace mixopt {

MixNormContext::MixNormContext(Grid2D grid) : grid_(grid), ct_(grid) {
    const int n = grid.n;
    const int M = n - 1;
    const double h = grid.h;
    std::vector<double> lam1_cont(n), lam1_disc(n), w1_cont(n), w1_disc(n);
    for (int j = 0; j < n; ++j) {
        lam1_cont[j] = M_PI * M_PI * static_cast<double>(j) * j;
        lam1_disc[j] = (2.0 - 2.0 * std::cos(M_PI * j / static_cast<double>(M))) / (h * h);
        w1_cont[j] = (j == 0) ? 1.0 : 0.5;
        w1_disc[j] = (j == 0 || j == M) ? 1.0 : 0.5;
    }
    lambda_cont_.resize(static_cast<size_t>(n) * n);
    lambda_disc_.resize(static_cast<size_t>(n) * n);
    w_cont_.resize(static_cast<size_t>(n) * n);
    w_disc_.resize(static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const size_t id = static_cast<size_t>(j) * n + k;
            lambda_cont_[id] = 1.0 + lam1_cont[j] + lam1_cont[k];
            lambda_disc_[id] = 1.0 + lam1_disc[j] + lam1_disc[k];
            w_cont_[id] = w1_cont[j] * w1_cont[k];
            w_disc_[id] = w1_disc[j] * w1_disc[k];
        }
    }
}

double MixNormContext::mix_norm_sq(const ScalarField& theta) const {
    const std::vector<double> c = ct_.forward(theta);
    double s = 0.0;
    for (size_t i = 0; i < c.size(); ++i) s += c[i] * c[i] * w_cont_[i] / lambda_cont_[i];
    return s;
}

double MixNormContext::mix_norm(const ScalarField& theta) const {
    return std::sqrt(mix_norm_sq(theta));
}

ScalarField MixNormContext::solve_helmholtz(const ScalarField& theta) const {
    std::vector<double> c = ct_.forward(theta);
    for (size_t i = 0; i < c.size(); ++i) c[i] /= lambda_disc_[i];
    return ct_.inverse(c);
}

ScalarField MixNormContext::mix_gradient(const ScalarField& theta) const {
    std::vector<double> c = ct_.forward(theta);
    for (size_t i = 0; i < c.size(); ++i) c[i] *= w_cont_[i] / (lambda_cont_[i] * w_disc_[i]);
    return ct_.inverse(c);
}

double MixNormContext::violation(const ScalarField& theta_tf, double theta_bar, double r, double c0_sq) const {
    if (!(c0_sq > 0.0))
        throw std::invalid_argument("violation: initial datum is already uniform (c0_sq <= 0)");
    if (!(r > 0.0) || !(r < 1.0))
        throw std::invalid_argument("violation: target ratio r must lie in (0,1)");
    ScalarField diff = theta_tf;
    for (int j = 0; j < grid_.n; ++j)
        for (int k = 0; k < grid_.n; ++k)
            diff(j, k) -= theta_bar;
    return mix_norm_sq(diff) - r * r * c0_sq;
}

} // namespace mixopt
