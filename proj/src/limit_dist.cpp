#include "cpdetect/limit_dist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "cpdetect/rng.hpp"

namespace cpdetect {

namespace {

constexpr double kSeriesCutoff = 1e-12;

void check_unit_interval(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error(std::string("z_covariance: ") + name + " outside [0, 1]");
    }
}

}  // namespace

double ks_cdf(double x) {
    if (!(x > 0.0)) return 0.0;
    if (x < 1.0) {
        // Jacobi theta form; the alternating series converges slowly for small x.
        const double c = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
        double sum = 0.0;
        for (int k = 1;; ++k) {
            const double m = 2.0 * k - 1.0;
            const double term = std::exp(-m * m * c);
            sum += term;
            if (term < kSeriesCutoff) break;
        }
        return std::sqrt(2.0 * std::numbers::pi) / x * sum;
    }
    double sum = 0.0;
    for (int k = 1;; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1) ? term : -term;
        if (term < kSeriesCutoff) break;
    }
    return std::clamp(1.0 - 2.0 * sum, 0.0, 1.0);
}

double ks_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("ks_quantile: p must lie in (0, 1)");
    double lo = 0.0;
    double hi = 1.0;
    while (ks_cdf(hi) < p) hi *= 2.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (ks_cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

bool CovarianceSpec::is_psd() const noexcept {
    const double scale = std::max({std::fabs(sigma11), std::fabs(sigma22), std::fabs(sigma12), 1.0});
    const double tol = 1e-12 * scale * scale;
    return sigma11 >= 0.0 && sigma22 >= 0.0 && sigma12 * sigma12 <= sigma11 * sigma22 + tol;
}

double z_covariance(double lambda, double mu, const CovarianceSpec& spec) {
    check_unit_interval(lambda, "lambda");
    check_unit_interval(mu, "mu");
    const double m = std::min(lambda, mu);
    return spec.sigma11 * ((1.0 - lambda) * (1.0 - mu) * m) +
           spec.sigma22 * (lambda * mu * (1.0 - mu - lambda + m)) +
           spec.sigma12 * (mu * (1.0 - lambda) * (lambda - m) + lambda * (1.0 - mu) * (mu - m));
}

LimitPath simulate_limit_process(const CovarianceSpec& spec, std::size_t grid_size,
                                 std::uint64_t seed) {
    if (grid_size < 2) throw std::invalid_argument("limit path needs grid_size >= 2");
    if (!spec.is_psd()) throw std::invalid_argument("covariance spec is not positive semidefinite");

    // Symmetric square root of the 2x2 PSD matrix: (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
    const double det = std::max(spec.sigma11 * spec.sigma22 - spec.sigma12 * spec.sigma12, 0.0);
    const double s = std::sqrt(det);
    const double t = std::sqrt(spec.sigma11 + spec.sigma22 + 2.0 * s);
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    if (t > 0.0) {
        a11 = (spec.sigma11 + s) / t;
        a12 = spec.sigma12 / t;
        a22 = (spec.sigma22 + s) / t;
    }

    const std::size_t steps = grid_size - 1;
    const double root_dt = std::sqrt(1.0 / static_cast<double>(steps));
    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;

    LimitPath path;
    path.grid.resize(grid_size);
    path.z_values.resize(grid_size);
    std::vector<double> w1(grid_size, 0.0);
    std::vector<double> w2(grid_size, 0.0);
    for (std::size_t i = 1; i < grid_size; ++i) {
        const double g1 = normal(engine);
        const double g2 = normal(engine);
        w1[i] = w1[i - 1] + root_dt * (a11 * g1 + a12 * g2);
        w2[i] = w2[i - 1] + root_dt * (a12 * g1 + a22 * g2);
    }
    const double w2_end = w2.back();
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double lambda = (i == steps) ? 1.0 : static_cast<double>(i) / static_cast<double>(steps);
        path.grid[i] = lambda;
        path.z_values[i] = (1.0 - lambda) * w1[i] + lambda * (w2_end - w2[i]);
    }
    return path;
}

double sup_abs(const LimitPath& path) {
    double best = 0.0;
    for (double z : path.z_values) best = std::max(best, std::fabs(z));
    return best;
}

ReferenceDistribution ReferenceDistribution::uniform01() {
    return {[](double x) { return std::clamp(x, 0.0, 1.0); }, 0.5};
}

ReferenceDistribution ReferenceDistribution::standard_normal() {
    return {[](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }, 0.0};
}

double kernel_projection(ProjectionKind kind, double x, const ReferenceDistribution& reference) {
    switch (kind) {
        case ProjectionKind::WilcoxonH1: return 0.5 - reference.cdf(x);
        case ProjectionKind::WilcoxonH2: return reference.cdf(x) - 0.5;
        case ProjectionKind::GaussH1: return x - reference.mean;
        case ProjectionKind::GaussH2: return reference.mean - x;
    }
    throw std::invalid_argument("unknown projection kind");
}

double gaussian_copula_uniform_covariance(double r) {
    if (!(std::fabs(r) <= 1.0)) throw std::domain_error("correlation outside [-1, 1]");
    return std::asin(r / 2.0) / (2.0 * std::numbers::pi);
}

double wilcoxon_sigma1_true(double rho) {
    if (!(std::fabs(rho) < 1.0)) throw std::domain_error("wilcoxon_sigma1_true needs |rho| < 1");
    double total = 1.0 / 12.0;
    double r = rho;
    while (true) {
        const double term = gaussian_copula_uniform_covariance(r);
        if (std::fabs(term) < kSeriesCutoff) break;
        total += 2.0 * term;
        r *= rho;
    }
    return total;
}

CovarianceSpec wilcoxon_ar1_spec(double rho) {
    const double s = wilcoxon_sigma1_true(rho);
    return {s, -s, s};
}

}  // namespace cpdetect
