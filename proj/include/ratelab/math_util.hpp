#ifndef RATELAB_MATH_UTIL_HPP
#define RATELAB_MATH_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace ratelab {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// Two-sided 99% normal quantile, used for every confidence band in the lab.
inline constexpr double z99 = 2.5758293035489004;

/// Max-shifted log(sum(exp(v))). Empty input and all -inf both give -inf.
inline double log_sum_exp(std::span<const double> vals) {
    double m = neg_inf;
    for (double v : vals) m = std::max(m, v);
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (double v : vals) {
        if (v != neg_inf) s += std::exp(v - m);
    }
    return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// |a-b| relative to the larger magnitude; exact zeros compare as equal.
inline double relative_error(double a, double b) {
    if (a == b) return 0.0;
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

/// Neumaier-compensated accumulator; deterministic for a fixed add order.
class StableSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Golden-section minimizer for a convex function on [lo, hi].
/// Returns the midpoint of the final bracket; width shrinks below xtol.
template <class F>
std::pair<double, double> golden_minimize(F&& f, double lo, double hi, double xtol = 1e-12) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

} // namespace ratelab

#endif
