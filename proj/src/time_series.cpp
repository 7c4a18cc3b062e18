#include "cpdetect/time_series.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cpdetect {

TimeSeries::TimeSeries(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
        throw std::invalid_argument("time series needs at least 2 observations, got " +
                                    std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw std::invalid_argument("non-finite value at index " + std::to_string(i));
        }
    }
}

}  // namespace cpdetect
