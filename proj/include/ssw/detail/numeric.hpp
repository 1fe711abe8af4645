#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

namespace ssw::detail {

/// Pairwise (tree) reduction of `term(i)` for i in [lo, hi). Error grows like
/// O(log n * eps) instead of O(n * eps), and the reduction order is fixed, so
/// results are reproducible for a given range regardless of the caller.
template <class Term>
double pairwise_sum(std::size_t lo, std::size_t hi, Term&& term) {
    const std::size_t n = hi - lo;
    if (n <= 64) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        return acc;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, std::forward<Term>(term));
}

inline double pairwise_sum(std::span<const double> values) {
    return pairwise_sum(0, values.size(), [&](std::size_t i) { return values[i]; });
}

/// Neumaier-compensated running sum; used for cumulative mass profiles where
/// every prefix matters and drift over 2^14+ atoms must stay near eps.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }

    double value() const { return sum + comp; }
};

} // namespace ssw::detail
