#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cpdetect/time_series.hpp"

namespace cpdetect {

enum class ProcessKind { Wilcoxon, Cusum };

/// Values of a two-sample U-statistic process over all split points k = 1..n-1.
///
/// Entry k-1 of each vector belongs to split point k. `raw` is the inner double
/// sum over i <= k < j of the centered kernel; `normalized` is raw / n^{3/2}.
/// For Wilcoxon traces `pair_counts[k-1]` holds #{i <= k < j : X_i < X_j}
/// exactly, so raw = pair_count - k(n-k)/2. Cusum traces leave it empty.
struct ProcessTrace {
    ProcessKind kind;
    std::size_t n;
    std::vector<double> raw;
    std::vector<double> normalized;
    std::vector<std::int64_t> pair_counts;
};

struct MaxStatistic {
    double value;          // max_k |normalized[k]|
    std::size_t argmax_k;  // smallest split point attaining the max, 1-based
};

/// CUSUM process: raw[k] = sum_{i<=k} sum_{j>k} (X_i - X_j) = n*S_k - k*S_n. O(n).
[[nodiscard]] ProcessTrace cusum_process(const TimeSeries& series);

/// Wilcoxon process: raw[k] = sum_{i<=k} sum_{j>k} (1{X_i < X_j} - 1/2).
///
/// Pair counts are updated split by split with two Fenwick trees over the
/// rank-compressed values, O(n log n) overall. Ties count as "not less".
[[nodiscard]] ProcessTrace wilcoxon_process(const TimeSeries& series);

inline constexpr std::size_t kBruteForceMaxLength = 10'000;

/// Literal evaluation of the double sums. Test oracle only; throws
/// std::length_error for series longer than kBruteForceMaxLength.
[[nodiscard]] ProcessTrace brute_force_process(const TimeSeries& series, ProcessKind kind);

[[nodiscard]] MaxStatistic max_statistic(const ProcessTrace& trace);

}  // namespace cpdetect
