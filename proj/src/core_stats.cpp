#include "cpdetect/core_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cpdetect {

namespace {

class FenwickTree {
public:
    explicit FenwickTree(std::size_t size) : tree_(size + 1, 0) {}

    void add(std::size_t index, std::int64_t delta) {
        for (std::size_t i = index + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }

    // Sum over positions [0, index).
    [[nodiscard]] std::int64_t prefix(std::size_t index) const {
        std::int64_t sum = 0;
        for (std::size_t i = index; i > 0; i -= i & (~i + 1)) sum += tree_[i];
        return sum;
    }

private:
    std::vector<std::int64_t> tree_;
};

// Dense ranks 0..m-1, equal values share a rank.
std::vector<std::size_t> dense_ranks(std::span<const double> x, std::size_t& distinct) {
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    distinct = sorted.size();
    std::vector<std::size_t> ranks(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        ranks[i] = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), x[i]) - sorted.begin());
    }
    return ranks;
}

ProcessTrace finish_wilcoxon(std::size_t n, std::vector<std::int64_t> counts) {
    ProcessTrace trace{ProcessKind::Wilcoxon, n, {}, {}, std::move(counts)};
    const double scale = std::pow(static_cast<double>(n), 1.5);
    trace.raw.resize(n - 1);
    trace.normalized.resize(n - 1);
    for (std::size_t k = 1; k < n; ++k) {
        // k(n-k) is exact in double for any realistic n; the subtraction of a
        // half-integer from an integer count is exact too.
        const double half_pairs = 0.5 * static_cast<double>(k) * static_cast<double>(n - k);
        trace.raw[k - 1] = static_cast<double>(trace.pair_counts[k - 1]) - half_pairs;
        trace.normalized[k - 1] = trace.raw[k - 1] / scale;
    }
    return trace;
}

ProcessTrace finish_cusum(std::size_t n, std::vector<double> raw) {
    ProcessTrace trace{ProcessKind::Cusum, n, std::move(raw), {}, {}};
    const double scale = std::pow(static_cast<double>(n), 1.5);
    trace.normalized.resize(trace.raw.size());
    std::transform(trace.raw.begin(), trace.raw.end(), trace.normalized.begin(),
                   [scale](double r) { return r / scale; });
    return trace;
}

}  // namespace

ProcessTrace cusum_process(const TimeSeries& series) {
    const auto x = series.values();
    const std::size_t n = x.size();
    double total = 0.0;
    for (double v : x) total += v;

    std::vector<double> raw(n - 1);
    double prefix = 0.0;
    const double nd = static_cast<double>(n);
    for (std::size_t k = 1; k < n; ++k) {
        prefix += x[k - 1];
        raw[k - 1] = nd * prefix - static_cast<double>(k) * total;
    }
    return finish_cusum(n, std::move(raw));
}

ProcessTrace wilcoxon_process(const TimeSeries& series) {
    const auto x = series.values();
    const std::size_t n = x.size();
    std::size_t distinct = 0;
    const auto rank = dense_ranks(x, distinct);

    FenwickTree left(distinct);
    FenwickTree right(distinct);
    for (std::size_t j = 1; j < n; ++j) right.add(rank[j], 1);
    left.add(rank[0], 1);

    // count(1) = #{j > 1 : X_1 < X_j}
    auto greater_on_right = [&](std::size_t r) {
        return right.prefix(distinct) - right.prefix(r + 1);
    };
    std::vector<std::int64_t> counts(n - 1);
    std::int64_t count = greater_on_right(rank[0]);
    counts[0] = count;

    for (std::size_t k = 1; k + 1 < n; ++k) {
        // Move X_{k+1} (0-based index k) from the right sample to the left one.
        const std::size_t r = rank[k];
        right.add(r, -1);
        count -= left.prefix(r);          // pairs (i <= k, k+1) with X_i < X_{k+1}
        count += greater_on_right(r);     // pairs (k+1, j > k+1) with X_{k+1} < X_j
        left.add(r, 1);
        counts[k] = count;
    }
    return finish_wilcoxon(n, std::move(counts));
}

ProcessTrace brute_force_process(const TimeSeries& series, ProcessKind kind) {
    const auto x = series.values();
    const std::size_t n = x.size();
    if (n > kBruteForceMaxLength) {
        throw std::length_error("brute_force_process is limited to n <= " +
                                std::to_string(kBruteForceMaxLength));
    }
    if (kind == ProcessKind::Wilcoxon) {
        std::vector<std::int64_t> counts(n - 1, 0);
        for (std::size_t k = 1; k < n; ++k) {
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = k; j < n; ++j) {
                    if (x[i] < x[j]) ++counts[k - 1];
                }
            }
        }
        return finish_wilcoxon(n, std::move(counts));
    }
    std::vector<double> raw(n - 1, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = k; j < n; ++j) sum += x[i] - x[j];
        }
        raw[k - 1] = sum;
    }
    return finish_cusum(n, std::move(raw));
}

MaxStatistic max_statistic(const ProcessTrace& trace) {
    if (trace.normalized.empty()) {
        throw std::invalid_argument("max_statistic: empty process trace");
    }
    MaxStatistic best{std::fabs(trace.normalized[0]), 1};
    for (std::size_t k = 1; k < trace.normalized.size(); ++k) {
        const double v = std::fabs(trace.normalized[k]);
        if (v > best.value) best = {v, k + 1};
    }
    return best;
}

}  // namespace cpdetect
