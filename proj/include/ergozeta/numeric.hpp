#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace ergozeta {

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }
    void merge(const CompensatedSum& other) {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y ~ intercept + slope * x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n == 0) return {};
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return {slope, my - slope * mx};
}

/// n points geometrically spaced from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    std::vector<double> grid(n);
    if (n == 1) {
        grid[0] = lo;
        return grid;
    }
    const double ratio = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) grid[i] = lo * std::exp(ratio * static_cast<double>(i));
    grid.back() = hi;
    return grid;
}

/// Fixed 20-point Gauss-Legendre rule on [a, b].
template <class F>
double gauss_legendre(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

struct IntegralEstimate {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

// One G15/K31 panel. Boost reports |K - G| for the rule mapped to [-1, 1],
// so it is rescaled to the panel width here.
template <class F>
IntegralEstimate gk_panel(F& f, double a, double b, double& l1) {
    IntegralEstimate r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &r.error, &l1);
    r.error *= 0.5 * (b - a);
    return r;
}

template <class F>
IntegralEstimate gk_bisect(F& f, double a, double b, IntegralEstimate whole, double tolerance, unsigned levels) {
    if (levels == 0 || whole.error <= tolerance) return whole;
    const double mid = 0.5 * (a + b);
    double l1 = 0.0;
    const IntegralEstimate left = gk_panel(f, a, mid, l1);
    const IntegralEstimate right = gk_panel(f, mid, b, l1);
    const IntegralEstimate l = gk_bisect(f, a, mid, left, 0.5 * tolerance, levels - 1);
    const IntegralEstimate r = gk_bisect(f, mid, b, right, 0.5 * tolerance, levels - 1);
    return {l.value + r.value, l.error + r.error};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G15/K31) on a finite interval, bisecting until the
/// error estimate is below relative_tolerance times the integral of |f| or
/// `max_depth` levels are spent.
template <class F>
IntegralEstimate gauss_kronrod(F&& f, double a, double b, double relative_tolerance, unsigned max_depth = 18) {
    double l1 = 0.0;
    const IntegralEstimate whole = detail::gk_panel(f, a, b, l1);
    return detail::gk_bisect(f, a, b, whole, relative_tolerance * l1, max_depth);
}

/// Remainder of a sum whose last two terms were `previous` and `last`,
/// assuming the terms continue geometrically. Panels halving toward an
/// x^-p endpoint singularity have ratio 2^(p-1), so the guess is exact there.
/// Without a usable ratio the remainder is taken equal to `last`.
inline double geometric_tail(double previous, double last) {
    if (previous != 0.0) {
        const double r = last / previous;
        if (r >= 0.0 && r < 0.95) return last * r / (1.0 - r);
    }
    return last;
}

/// Composite Simpson rule for equally spaced samples; the sample count must be odd.
inline double simpson(std::span<const double> samples, double spacing) {
    const std::size_t n = samples.size();
    if (n < 3 || n % 2 == 0) return std::numeric_limits<double>::quiet_NaN();
    CompensatedSum s;
    s += samples.front();
    s += samples.back();
    for (std::size_t i = 1; i + 1 < n; ++i) s += samples[i] * (i % 2 == 1 ? 4.0 : 2.0);
    return s.value() * spacing / 3.0;
}

/// Standard normal CDF scaled to variance `variance`.
inline double normal_cdf(double x, double variance) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance));
}

}  // namespace ergozeta
