#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace mdma::detail {

// Neumaier summation.
template <typename T>
class CompensatedSum {
public:
    void add(T x) {
        const T t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    T value() const { return sum_ + comp_; }

private:
    T sum_{};
    T comp_{};
};

// Sums in descending magnitude with compensation. Reorders `terms`.
template <typename T>
T sorted_sum(std::vector<T>& terms) {
    std::sort(terms.begin(), terms.end(),
              [](T a, T b) { return std::abs(a) > std::abs(b); });
    CompensatedSum<T> acc;
    for (T t : terms) acc.add(t);
    return acc.value();
}

}  // namespace mdma::detail
