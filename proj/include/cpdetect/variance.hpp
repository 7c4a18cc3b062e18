#pragma once

#include <cstddef>
#include <optional>

#include "cpdetect/time_series.hpp"

namespace cpdetect {

/// Block length for subsampling: a fixed l, or the AR(1) MSE-optimal rule
/// driven by the lag-1 sample autocorrelation.
struct BlockLengthRule {
    enum class Mode { Fixed, CarlsteinAdaptive };

    Mode mode = Mode::CarlsteinAdaptive;
    std::size_t length = 0;  // used only when mode == Fixed

    static BlockLengthRule fixed(std::size_t l);
    static BlockLengthRule adaptive() { return {}; }

    friend bool operator==(const BlockLengthRule&, const BlockLengthRule&) = default;
};

enum class SubsamplingScheme { Overlapping, NonOverlapping };

struct VarianceEstimate {
    double sigma_hat;                  // scale used for studentizing, >= 0
    std::size_t block_length_used;     // >= 1
    std::optional<double> rho_hat;     // set only for the adaptive rule
};

/// Clamp applied to the lag-1 autocorrelation before it feeds the block-length rule.
inline constexpr double kRhoClamp = 0.999;

/// Ordinary lag-1 sample autocorrelation, clamped to [-0.999, 0.999].
/// Requires n >= 3 and a non-constant series (std::invalid_argument otherwise).
[[nodiscard]] double lag1_autocorrelation(const TimeSeries& series);

/// max(ceil(n^{1/3} (2|rho| / (1 - rho^2))^{2/3}), 1), capped at floor(n/2).
[[nodiscard]] std::size_t carlstein_block_length(std::size_t n, double rho);

/// Y_j = F_n(X_j) = #{i : X_i <= X_j} / n.
[[nodiscard]] TimeSeries edf_transform(const TimeSeries& series);

/// Subsampling estimate of the long-run standard deviation of the partial sums
/// of X (sigma_2). Each block of length l contributes (B - l*mean)^2 / l; the
/// non-overlapping scheme uses floor(n/l) disjoint blocks and drops the tail,
/// the overlapping scheme uses all n-l+1 windows.
[[nodiscard]] VarianceEstimate sigma2_subsampling(const TimeSeries& series, BlockLengthRule rule,
                                                  SubsamplingScheme scheme);

/// Rank-based subsampling estimate of sigma_1, the long-run scale of F(X_j).
/// Works on Y = F_n(X); each block contributes sqrt(pi/2) |B - l*mean(Y)| / sqrt(l).
/// Returns the scale itself, not its square.
[[nodiscard]] VarianceEstimate sigma1_subsampling(const TimeSeries& series, BlockLengthRule rule,
                                                  SubsamplingScheme scheme);

}  // namespace cpdetect
