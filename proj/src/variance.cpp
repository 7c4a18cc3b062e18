#include "cpdetect/variance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpdetect {

BlockLengthRule BlockLengthRule::fixed(std::size_t l) {
    if (l == 0) throw std::invalid_argument("fixed block length must be >= 1");
    return {Mode::Fixed, l};
}

double lag1_autocorrelation(const TimeSeries& series) {
    const auto x = series.values();
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("lag-1 autocorrelation needs n >= 3");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        den += d * d;
        if (i + 1 < n) num += d * (x[i + 1] - mean);
    }
    if (!(den > 0.0)) {
        throw std::invalid_argument("lag-1 autocorrelation undefined for a constant series");
    }
    return std::clamp(num / den, -kRhoClamp, kRhoClamp);
}

std::size_t carlstein_block_length(std::size_t n, double rho) {
    if (n < 2) throw std::invalid_argument("carlstein_block_length needs n >= 2");
    if (!(std::fabs(rho) < 1.0)) {
        throw std::invalid_argument("carlstein_block_length needs |rho| < 1");
    }
    const double a = std::fabs(rho);
    const double ratio = 2.0 * a / (1.0 - a * a);
    const double raw = std::cbrt(static_cast<double>(n)) * std::pow(ratio, 2.0 / 3.0);
    const auto l = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(raw)), 1);
    return std::min(l, n / 2);
}

TimeSeries edf_transform(const TimeSeries& series) {
    const auto x = series.values();
    const std::size_t n = x.size();
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto at_most = std::upper_bound(sorted.begin(), sorted.end(), x[j]) - sorted.begin();
        y[j] = static_cast<double>(at_most) / static_cast<double>(n);
    }
    return TimeSeries(std::move(y));
}

namespace {

struct ResolvedBlock {
    std::size_t length;
    std::optional<double> rho_hat;
};

ResolvedBlock resolve_block_length(const TimeSeries& series, BlockLengthRule rule) {
    const std::size_t n = series.size();
    ResolvedBlock resolved{rule.length, std::nullopt};
    if (rule.mode == BlockLengthRule::Mode::CarlsteinAdaptive) {
        const double rho = lag1_autocorrelation(series);
        resolved = {carlstein_block_length(n, rho), rho};
    }
    if (resolved.length < 1 || resolved.length > n / 2) {
        throw std::invalid_argument("block length " + std::to_string(resolved.length) +
                                    " outside [1, n/2] for n = " + std::to_string(n));
    }
    return resolved;
}

// Averages f(block_sum - l * mean) over the blocks selected by the scheme.
template <class BlockFunctional>
double average_block_functional(std::span<const double> x, std::size_t l,
                                SubsamplingScheme scheme, BlockFunctional f) {
    const std::size_t n = x.size();
    const double centre =
        static_cast<double>(l) * std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);

    double acc = 0.0;
    std::size_t blocks = 0;
    if (scheme == SubsamplingScheme::NonOverlapping) {
        blocks = n / l;
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto first = x.begin() + static_cast<std::ptrdiff_t>(b * l);
            acc += f(std::accumulate(first, first + static_cast<std::ptrdiff_t>(l), 0.0) - centre);
        }
    } else {
        blocks = n - l + 1;
        // Fresh sum per window keeps rounding independent of the window position.
        for (std::size_t s = 0; s < blocks; ++s) {
            const auto first = x.begin() + static_cast<std::ptrdiff_t>(s);
            acc += f(std::accumulate(first, first + static_cast<std::ptrdiff_t>(l), 0.0) - centre);
        }
    }
    return acc / static_cast<double>(blocks);
}

}  // namespace

VarianceEstimate sigma2_subsampling(const TimeSeries& series, BlockLengthRule rule,
                                    SubsamplingScheme scheme) {
    const auto block = resolve_block_length(series, rule);
    const double l = static_cast<double>(block.length);
    const double var = average_block_functional(series.values(), block.length, scheme,
                                                [l](double d) { return d * d / l; });
    return {std::sqrt(var), block.length, block.rho_hat};
}

VarianceEstimate sigma1_subsampling(const TimeSeries& series, BlockLengthRule rule,
                                    SubsamplingScheme scheme) {
    // The block length is resolved on the raw series; rho-hat is not rank based.
    const auto block = resolve_block_length(series, rule);
    const TimeSeries y = edf_transform(series);
    const double root_l = std::sqrt(static_cast<double>(block.length));
    const double mean_abs = average_block_functional(
        y.values(), block.length, scheme, [root_l](double d) { return std::fabs(d) / root_l; });
    const double sqrt_half_pi = std::sqrt(std::numbers::pi / 2.0);
    return {sqrt_half_pi * mean_abs, block.length, block.rho_hat};
}

}  // namespace cpdetect
