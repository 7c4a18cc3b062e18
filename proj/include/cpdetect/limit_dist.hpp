#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace cpdetect {

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov law of sup |Brownian bridge|
// ---------------------------------------------------------------------------

/// P(sup_{0<=t<=1} |B(t)| <= x) for a standard Brownian bridge B; 0 for x <= 0.
[[nodiscard]] double ks_cdf(double x);

/// Inverse of ks_cdf by bisection, absolute tolerance 1e-10 in x.
/// Throws std::domain_error unless 0 < p < 1.
[[nodiscard]] double ks_quantile(double p);

// ---------------------------------------------------------------------------
// Limit process Z(l) = (1-l) W1(l) + l (W2(1) - W2(l))
// ---------------------------------------------------------------------------

/// Long-run covariance matrix [[s11, s12], [s12, s22]] of the Brownian motion (W1, W2).
struct CovarianceSpec {
    double sigma11 = 0.0;
    double sigma12 = 0.0;
    double sigma22 = 0.0;

    /// Symmetric positive semidefinite, up to a relative tolerance of 1e-12.
    [[nodiscard]] bool is_psd() const noexcept;
};

/// Cov(Z(lambda), Z(mu)). Throws std::domain_error for arguments outside [0, 1].
[[nodiscard]] double z_covariance(double lambda, double mu, const CovarianceSpec& spec);

struct LimitPath {
    std::vector<double> grid;      // 0 = grid.front() < ... < grid.back() = 1
    std::vector<double> z_values;  // Z at each grid point; exactly 0 at both ends
};

/// Simulates Z on `grid_size` uniform points of [0, 1] from correlated Gaussian
/// increments of (W1, W2). Deterministic in `seed`. Throws std::invalid_argument
/// for grid_size < 2 or a spec that is not PSD.
[[nodiscard]] LimitPath simulate_limit_process(const CovarianceSpec& spec, std::size_t grid_size,
                                               std::uint64_t seed);

inline constexpr std::size_t kDefaultLimitGrid = 2048;

[[nodiscard]] double sup_abs(const LimitPath& path);

// ---------------------------------------------------------------------------
// Hoeffding projections and true long-run constants
// ---------------------------------------------------------------------------

/// Linear parts h1, h2 of the Hoeffding decomposition for the two change-point
/// kernels: Wilcoxon h(x, y) = 1{x < y} and the CUSUM kernel h(x, y) = x - y.
enum class ProjectionKind { WilcoxonH1, WilcoxonH2, GaussH1, GaussH2 };

/// Reference marginal F of the observations. `mean` is only used by the CUSUM
/// projections, `cdf` only by the Wilcoxon ones.
struct ReferenceDistribution {
    std::function<double(double)> cdf;
    double mean = 0.0;

    static ReferenceDistribution uniform01();
    static ReferenceDistribution standard_normal();
};

/// WilcoxonH1: 1/2 - F(x); WilcoxonH2: F(x) - 1/2; GaussH1: x - E X; GaussH2: E X - x.
[[nodiscard]] double kernel_projection(ProjectionKind kind, double x,
                                       const ReferenceDistribution& reference);

/// Cov(F(X_1), F(X_2)) when (X_1, X_2) are jointly Gaussian with correlation r
/// and F is their common marginal cdf: asin(r/2) / (2 pi).
[[nodiscard]] double gaussian_copula_uniform_covariance(double r);

/// True sigma_1^2 = Var F(X_0) + 2 sum_{j>=1} Cov(F(X_0), F(X_j)) for a
/// stationary Gaussian AR(1) with coefficient rho. Note this returns the
/// variance; the test statistic limit uses its square root.
[[nodiscard]] double wilcoxon_sigma1_true(double rho);

/// Limit-process covariance for the Wilcoxon kernel under a Gaussian AR(1):
/// (s, -s, s) with s = wilcoxon_sigma1_true(rho).
[[nodiscard]] CovarianceSpec wilcoxon_ar1_spec(double rho);

}  // namespace cpdetect
