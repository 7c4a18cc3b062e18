#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cpdetect {

/// An ordered sequence of finite real observations X_1..X_n with n >= 2.
///
/// Construction validates the invariants; once built the series is immutable.
class TimeSeries {
public:
    /// Throws std::invalid_argument if fewer than two values are given or any
    /// value is NaN or infinite.
    explicit TimeSeries(std::vector<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::vector<double> values_;
};

}  // namespace cpdetect
