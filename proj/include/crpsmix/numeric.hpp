#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace crpsmix {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// ln(sum_i exp(x_i)), max-shifted. Entries equal to -inf contribute nothing;
/// returns -inf when every entry is -inf or the span is empty.
inline double log_sum_exp(std::span<const double> x) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : x) hi = std::max(hi, v);
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

}  // namespace crpsmix
