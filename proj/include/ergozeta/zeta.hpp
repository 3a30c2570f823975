#pragma once

// Riemann zeta function and its first two derivatives by Euler-Maclaurin
// summation, valid for Re z > -1, z != 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "ergozeta/errors.hpp"
#include "ergozeta/numeric.hpp"

namespace ergozeta {

using Complex = std::complex<double>;

struct ZetaConfig {
    std::size_t term_cap = 200000;  ///< N_max
    int bernoulli_order = 8;        ///< highest Bernoulli index used in the correction
    double target_relative_error = 1e-12;

    void validate() const {
        if (term_cap < 10) throw DomainError("ZetaConfig: term_cap must be at least 10");
        if (bernoulli_order < 2 || bernoulli_order > 16 || bernoulli_order % 2 != 0)
            throw DomainError("ZetaConfig: bernoulli_order must be even and in [2, 16]");
    }

    /// Largest |Im z| evaluated at full accuracy.
    double accurate_height() const { return static_cast<double>(term_cap) / 1.3; }

    /// A copy whose cap covers |Im z| up to `height` without degradation.
    ZetaConfig covering(double height) const {
        ZetaConfig c = *this;
        c.term_cap = std::max(term_cap, static_cast<std::size_t>(std::ceil(1.3 * height)) + 10);
        return c;
    }
};

struct ZetaValue {
    Complex value;
    double error_estimate = 0.0;
    bool degraded = false;  ///< |Im z| beyond the accurate height of the configuration
};

namespace detail {

// B_2, B_4, ..., B_18.
inline constexpr std::array<double, 9> kBernoulli = {
    1.0 / 6.0,  -1.0 / 30.0,          1.0 / 42.0, -1.0 / 30.0,         5.0 / 66.0,
    -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0, 43867.0 / 798.0};

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

/// Truncated Taylor expansion in the complex variable: c[j] = f^(j)(z0) / j!.
template <int Order>
struct Jet {
    std::array<Complex, Order + 1> c{};

    static Jet constant(Complex v) {
        Jet j;
        j.c[0] = v;
        return j;
    }
    static Jet variable(Complex z0) {
        Jet j;
        j.c[0] = z0;
        if constexpr (Order >= 1) j.c[1] = 1.0;
        return j;
    }
    Jet& operator+=(const Jet& o) {
        for (int i = 0; i <= Order; ++i) c[i] += o.c[i];
        return *this;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (int i = 0; i <= Order; ++i)
            for (int j = 0; i + j <= Order; ++j) r.c[i + j] += a.c[i] * b.c[j];
        return r;
    }
    friend Jet operator*(Complex s, const Jet& a) {
        Jet r = a;
        for (auto& v : r.c) v *= s;
        return r;
    }
};

/// exp(-(z0 + e) * log_n) as a jet in e.
template <int Order>
Jet<Order> power_jet(Complex base_value, double log_n) {
    Jet<Order> j;
    double coeff = 1.0;
    for (int i = 0; i <= Order; ++i) {
        j.c[i] = base_value * coeff;
        coeff *= -log_n / (i + 1);
    }
    return j;
}

/// 1 / (z0 - 1 + e) as a jet in e.
template <int Order>
Jet<Order> inverse_shift_jet(Complex z0) {
    Jet<Order> j;
    const Complex a = z0 - 1.0;
    Complex p = 1.0 / a;
    for (int i = 0; i <= Order; ++i) {
        j.c[i] = p;
        p *= -1.0 / a;
    }
    return j;
}

inline Complex power_minus(double log_n, Complex z) {
    return std::polar(std::exp(-z.real() * log_n), -z.imag() * log_n);
}

/// Euler-Maclaurin with `forced_terms` leading terms, or the standard rule when it is 0.
template <int Order>
ZetaValue euler_maclaurin(Complex z, const ZetaConfig& cfg, std::size_t forced_terms = 0) {
    cfg.validate();
    if (z == Complex(1.0, 0.0)) throw PoleError("zeta: pole at z = 1");
    if (!(z.real() > -1.0)) throw DomainError("zeta: supported region is Re z > -1");
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DomainError("zeta: argument not finite");

    const double height = std::abs(z.imag());
    const double wanted = std::ceil(1.3 * height) + 10.0;
    const std::size_t n_terms =
        forced_terms > 0 ? forced_terms
                         : static_cast<std::size_t>(std::min(static_cast<double>(cfg.term_cap), std::max(10.0, wanted)));

    // Leading terms 1 .. N-1; the k-th derivative of n^-z is (-log n)^k n^-z.
    std::array<CompensatedSum, Order + 1> re_sum, im_sum;
    re_sum[0] += 1.0;
    for (std::size_t n = 2; n < n_terms; ++n) {
        const double log_n = std::log(static_cast<double>(n));
        Complex term = power_minus(log_n, z);
        for (int i = 0; i <= Order; ++i) {
            re_sum[i] += term.real();
            im_sum[i] += term.imag();
            term *= -log_n / (i + 1);
        }
    }
    Jet<Order> total;
    for (int i = 0; i <= Order; ++i) total.c[i] = Complex(re_sum[i].value(), im_sum[i].value());

    const double log_N = std::log(static_cast<double>(n_terms));
    const Complex n_pow = power_minus(log_N, z);  // N^-z
    const Jet<Order> n_jet = power_jet<Order>(n_pow, log_N);

    // Integral tail N^(1-z) / (z - 1) and the half endpoint term.
    total += (static_cast<double>(n_terms) * n_jet) * inverse_shift_jet<Order>(z);
    total += Complex(0.5) * n_jet;

    // Bernoulli corrections B_2j / (2j)! * z (z+1) ... (z+2j-2) * N^(-z-2j+1).
    const int pairs = cfg.bernoulli_order / 2;
    Jet<Order> rising = Jet<Order>::variable(z);  // z (z+1) ... (z+2j-2)
    Complex n_shift = 1.0 / static_cast<double>(n_terms);  // N^(-2j+1)
    const double inv_n2 = 1.0 / (static_cast<double>(n_terms) * static_cast<double>(n_terms));
    double omitted = 0.0;
    for (int j = 1; j <= pairs + 1; ++j) {
        const double coeff = detail::kBernoulli[j - 1] / detail::factorial(2 * j);
        const Jet<Order> term = (coeff * n_shift) * (rising * n_jet);
        if (j <= pairs) {
            total += term;
        } else {
            double mag = 0.0;
            for (int i = 0; i <= Order; ++i) mag = std::max(mag, std::abs(term.c[i]) * detail::factorial(i));
            omitted = mag;
        }
        rising = rising * Jet<Order>::variable(z + static_cast<double>(2 * j - 1));
        rising = rising * Jet<Order>::variable(z + static_cast<double>(2 * j));
        n_shift *= inv_n2;
    }

    ZetaValue out;
    out.value = total.c[Order] * detail::factorial(Order);
    // The remainder runs slightly above the first omitted term, hence the factor 2.
    out.error_estimate = 2.0 * omitted + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(out.value) *
                                       std::sqrt(static_cast<double>(n_terms));
    out.degraded = forced_terms > 0 ? 1.3 * height + 10.0 > static_cast<double>(n_terms) : height > cfg.accurate_height();
    return out;
}

}  // namespace detail

/// Number of leading terms Euler-Maclaurin uses at z.
inline std::size_t zeta_terms(Complex z, const ZetaConfig& cfg = {}) {
    const double wanted = std::ceil(1.3 * std::abs(z.imag())) + 10.0;
    return static_cast<std::size_t>(std::min(static_cast<double>(cfg.term_cap), std::max(10.0, wanted)));
}

inline ZetaValue zeta_eval(Complex z, const ZetaConfig& cfg = {}) { return detail::euler_maclaurin<0>(z, cfg); }

/// zeta(z) with an explicit number of leading terms (at least 10), for convergence studies.
inline ZetaValue zeta_eval_terms(Complex z, std::size_t terms, const ZetaConfig& cfg = {}) {
    if (terms < 10) throw DomainError("zeta_eval_terms: need at least 10 terms");
    return detail::euler_maclaurin<0>(z, cfg, terms);
}

/// k-th derivative of zeta for k in {1, 2}.
inline ZetaValue zeta_derivative(Complex z, int k, const ZetaConfig& cfg = {}) {
    switch (k) {
        case 1: return detail::euler_maclaurin<1>(z, cfg);
        case 2: return detail::euler_maclaurin<2>(z, cfg);
        default: throw DomainError("zeta_derivative: order must be 1 or 2");
    }
}

/// zeta^(k) for k in {0, 1, 2}.
inline ZetaValue zeta_any(Complex z, int k, const ZetaConfig& cfg = {}) {
    return k == 0 ? zeta_eval(z, cfg) : zeta_derivative(z, k, cfg);
}

struct GrowthFit {
    double exponent = 0.0;
    double log_constant = 0.0;  ///< intercept of log envelope against log t
    std::size_t degraded = 0;
};

/// Least-squares slope of log(running max of |values|) against log t.
inline GrowthFit envelope_exponent(std::span<const double> t, std::span<const double> magnitudes) {
    std::vector<double> lx, ly;
    double envelope = 0.0;
    for (std::size_t i = 0; i < std::min(t.size(), magnitudes.size()); ++i) {
        envelope = std::max(envelope, std::abs(magnitudes[i]));
        if (envelope <= 0.0) continue;
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(envelope));
    }
    const LinearFit fit = least_squares(lx, ly);
    return {fit.slope, fit.intercept, 0};
}

/// 50 geometrically spaced heights from 1e2 to 1e6.
inline std::vector<double> default_growth_grid() { return geometric_grid(1e2, 1e6, 50); }

/**
 * Fitted growth exponent of |zeta^(k)(s + i t)| over an increasing grid of t.
 *
 * The configuration's term cap is raised to cover the largest grid point, so
 * none of the evaluations are degraded.
 */
inline GrowthFit growth_exponent_fit(double s, std::span<const double> t_grid, int k, const ZetaConfig& cfg = {}) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("growth_exponent_fit: s must lie in (0, 1)");
    if (t_grid.size() < 50) throw DomainError("growth_exponent_fit: grid needs at least 50 points");
    if (k < 0 || k > 2) throw DomainError("growth_exponent_fit: derivative order must be 0, 1 or 2");
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
    const ZetaConfig wide = cfg.covering(t_max);
    std::vector<double> mags(t_grid.size());
    std::size_t degraded = 0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const ZetaValue v = zeta_any(Complex(s, t_grid[i]), k, wide);
        mags[i] = std::abs(v.value);
        degraded += v.degraded ? 1 : 0;
    }
    GrowthFit fit = envelope_exponent(t_grid, mags);
    fit.degraded = degraded;
    return fit;
}

}  // namespace ergozeta
