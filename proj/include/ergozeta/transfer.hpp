#pragma once

// Transfer operator of the doubling map, its Ulam discretisation, and
// Monte-Carlo decay of correlations along phi-orbits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ergozeta/dynamics.hpp"
#include "ergozeta/errors.hpp"
#include "ergozeta/numeric.hpp"
#include "ergozeta/observables.hpp"
#include "ergozeta/parallel.hpp"
#include "ergozeta/rng.hpp"

namespace ergozeta {

/// Samples of a function at x_i = i / N, i = 0 .. N; represents the piecewise linear interpolant.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 3) throw DomainError("GridFunction: resolution must be at least 2");
        for (double v : values_)
            if (!std::isfinite(v)) throw DomainError("GridFunction: values must be finite");
    }

    template <class F>
    static GridFunction sample(F&& f, std::size_t resolution) {
        std::vector<double> v(resolution + 1);
        for (std::size_t i = 0; i <= resolution; ++i)
            v[i] = f(static_cast<double>(i) / static_cast<double>(resolution));
        return GridFunction(std::move(v));
    }

    std::size_t resolution() const { return values_.size() - 1; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Linear interpolation at x in [0, 1].
    double at(double x) const {
        const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(resolution());
        const auto i = std::min(static_cast<std::size_t>(pos), resolution() - 1);
        const double frac = pos - static_cast<double>(i);
        return values_[i] + frac * (values_[i + 1] - values_[i]);
    }

    double spacing() const { return 1.0 / static_cast<double>(resolution()); }

private:
    std::vector<double> values_;
};

/// (psi^ f)(x) = (f(x/2) + f((x+1)/2)) / 2 on the grid of f.
inline GridFunction apply_transfer(const GridFunction& f) {
    const std::size_t n = f.resolution();
    if (n % 2 != 0) throw DomainError("apply_transfer: resolution must be even");
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        // x/2 and (x+1)/2 sit at half-integer grid positions i/2 and (i+n)/2.
        auto half = [&](std::size_t twice) {
            return twice % 2 == 0 ? f[twice / 2] : 0.5 * (f[twice / 2] + f[twice / 2 + 1]);
        };
        out[i] = 0.5 * (half(i) + half(i + n));
    }
    return GridFunction(std::move(out));
}

/// Simpson integral of the grid samples (even resolution).
inline double integrate(const GridFunction& f) { return simpson(f.values(), f.spacing()); }

/**
 * |integral f (g o psi) - integral (psi^ f) g| on a shared grid.
 *
 * g o psi jumps at x = 1/2, so the left side is split there: on [0, 1/2] it
 * reads g at index 2i and on [1/2, 1] at index 2i - N, which are exact grid
 * lookups. Each piece uses Simpson's rule.
 */
inline double adjoint_residual(const GridFunction& f, const GridFunction& g) {
    const std::size_t n = f.resolution();
    if (g.resolution() != n) throw DomainError("adjoint_residual: resolutions differ");
    if (n % 4 != 0) throw DomainError("adjoint_residual: resolution must be a multiple of 4");
    const std::size_t half = n / 2;
    std::vector<double> left(half + 1), right(half + 1);
    for (std::size_t i = 0; i <= half; ++i) {
        left[i] = f[i] * g[2 * i];
        right[i] = f[half + i] * g[2 * i];
    }
    const double lhs = simpson(left, f.spacing()) + simpson(right, f.spacing());
    const GridFunction tf = apply_transfer(f);
    std::vector<double> prod(n + 1);
    for (std::size_t i = 0; i <= n; ++i) prod[i] = tf[i] * g[i];
    const double rhs = simpson(prod, f.spacing());
    return std::abs(lhs - rhs);
}

/// Exact L1 norm of the piecewise linear interpolant.
inline double l1_norm(const GridFunction& f) {
    CompensatedSum s;
    const double h = f.spacing();
    for (std::size_t i = 0; i < f.resolution(); ++i) {
        const double a = f[i], b = f[i + 1];
        if ((a >= 0.0) == (b >= 0.0)) {
            s += 0.5 * h * std::abs(a + b);
        } else {
            s += 0.5 * h * (a * a + b * b) / (std::abs(a) + std::abs(b));
        }
    }
    return s.value();
}

struct ContractionCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// ||psi^ f||_1 against ||f||_1.
inline ContractionCheck l1_contraction_check(const GridFunction& f) {
    ContractionCheck c;
    c.lhs = l1_norm(apply_transfer(f));
    c.rhs = l1_norm(f);
    c.pass = c.lhs <= c.rhs + 1e-9;
    return c;
}

/// psi^ applied to a callable.
template <class F>
auto transfer_of(F f) {
    return [f](double x) { return 0.5 * (f(0.5 * x) + f(0.5 * (x + 1.0))); };
}

struct SeminormContraction {
    SeminormEstimate transferred;  ///< estimate for psi^ f
    SeminormEstimate original;     ///< estimate for f
    double factor = 0.0;           ///< 2^(alpha - beta)
    std::vector<double> lhs;       ///< per-eps values of psi^ f on the tail
    std::vector<double> rhs;       ///< 2^(alpha - beta) times per-eps values of f on the tail
    bool pass = false;
};

/// Per-eps comparison of |psi^ f|_{alpha,beta} with 2^(alpha - beta) |f|_{alpha,beta} on the schedule tail.
template <class F>
SeminormContraction seminorm_contraction_check(F f, double alpha, double beta, const SeminormOptions& opts = {},
                                               double slack = 0.05) {
    SeminormContraction c;
    c.original = seminorm_estimate(f, alpha, beta, opts);
    c.transferred = seminorm_estimate(transfer_of(f), alpha, beta, opts);
    c.factor = std::pow(2.0, alpha - beta);
    c.pass = true;
    for (std::size_t i = c.original.tail_begin(); i < c.original.per_epsilon.size(); ++i) {
        const double l = c.transferred.per_epsilon[i];
        const double r = c.factor * c.original.per_epsilon[i];
        c.lhs.push_back(l);
        c.rhs.push_back(r);
        c.pass = c.pass && l <= r * (1.0 + slack);
    }
    return c;
}

/**
 * Ulam matrix of the doubling map on 2^m dyadic bins.
 *
 * Row i has exactly two nonzero entries, 1/2 at columns 2i mod 2^m and
 * 2i + 1 mod 2^m, so the matrix is stored implicitly.
 */
class UlamMatrix {
public:
    explicit UlamMatrix(int m) : m_(m) {
        if (m < 1 || m > 14) throw DomainError("ulam_matrix: m must lie in [1, 14]");
    }

    int level() const { return m_; }
    std::size_t size() const { return std::size_t{1} << m_; }

    double entry(std::size_t i, std::size_t j) const {
        const std::size_t mask = size() - 1;
        return (j == ((2 * i) & mask) || j == ((2 * i + 1) & mask)) ? 0.5 : 0.0;
    }

    double row_sum(std::size_t i) const {
        const std::size_t mask = size() - 1;
        return entry(i, (2 * i) & mask) + entry(i, (2 * i + 1) & mask);
    }

    /// (P v)_i = (v_{2i} + v_{2i+1}) / 2, indices mod 2^m.
    std::vector<double> apply(std::span<const double> v) const {
        const std::size_t mask = size() - 1;
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = 0.5 * (v[(2 * i) & mask] + v[(2 * i + 1) & mask]);
        return out;
    }

    /// (v^T P)_j = (v_{j/2} + v_{j/2 + 2^(m-1)}) / 2.
    std::vector<double> apply_left(std::span<const double> v) const {
        const std::size_t half = size() / 2;
        std::vector<double> out(size());
        for (std::size_t j = 0; j < size(); ++j) out[j] = 0.5 * (v[j / 2] + v[j / 2 + half]);
        return out;
    }

    /// Dense row-major matrix (m <= 10).
    std::vector<double> dense() const {
        if (m_ > 10) throw DomainError("UlamMatrix::dense: m must be at most 10");
        std::vector<double> d(size() * size(), 0.0);
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < size(); ++j) d[i * size() + j] = entry(i, j);
        return d;
    }

    /// Dense P^k (m <= 10), computed by repeated sparse products.
    std::vector<double> dense_power(int k) const {
        const std::size_t n = size();
        std::vector<double> acc(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) acc[i * n + i] = 1.0;
        if (m_ > 10) throw DomainError("UlamMatrix::dense_power: m must be at most 10");
        const std::size_t mask = n - 1;
        for (int step = 0; step < k; ++step) {
            std::vector<double> next(n * n);
            for (std::size_t i = 0; i < n; ++i) {
                const double* a = &acc[((2 * i) & mask) * n];
                const double* b = &acc[((2 * i + 1) & mask) * n];
                for (std::size_t j = 0; j < n; ++j) next[i * n + j] = 0.5 * (a[j] + b[j]);
            }
            acc = std::move(next);
        }
        return acc;
    }

private:
    int m_;
};

inline UlamMatrix ulam_matrix(int m) { return UlamMatrix(m); }

struct SpectralReport {
    std::vector<double> moduli;            ///< |lambda_1| >= |lambda_2|
    std::vector<double> leading_vector;    ///< invariant density, mean 1
    double gap = 0.0;                      ///< 1 - |lambda_2|
    std::size_t iterations = 0;
    std::optional<std::size_t> nilpotency_index;  ///< steps after which the deflated iterate vanished
};

/**
 * Leading eigenvalue and subdominant modulus by power iteration with deflation.
 *
 * The invariant density comes from left power iteration. The subdominant
 * modulus is the growth rate of the deflated iterate u <- P u - <pi, u> 1,
 * started from an integer vector; the matrix entries are 1/2, so these
 * iterates are exact dyadic numbers and a nilpotent remainder is seen as an
 * exactly vanishing iterate.
 */
inline SpectralReport spectrum(const UlamMatrix& p, std::size_t max_iterations = 10000, std::uint64_t seed = 1) {
    const std::size_t n = p.size();
    SpectralReport rep;
    Stream stream(seed, 0);

    // Left eigenvector (density).
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(1 + (stream.next_bits() % 1024));
    std::size_t it = 0;
    double lambda1 = 0.0;
    for (; it < max_iterations; ++it) {
        std::vector<double> next = p.apply_left(v);
        double num = 0.0, den = 0.0, diff = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            num += next[j] * v[j];
            den += v[j] * v[j];
            diff = std::max(diff, std::abs(next[j] - v[j]));
            norm = std::max(norm, std::abs(next[j]));
        }
        lambda1 = num / den;
        v = std::move(next);
        if (diff <= 1e-15 * norm) break;
    }
    if (it == max_iterations) throw ConvergenceError("spectrum: leading eigenvector did not converge");
    double total = 0.0;
    for (double x : v) total += x;
    rep.leading_vector.resize(n);
    for (std::size_t j = 0; j < n; ++j) rep.leading_vector[j] = v[j] * static_cast<double>(n) / total;

    // Deflated right iteration; pi = density / n sums to one.
    std::vector<double> pi(n);
    for (std::size_t j = 0; j < n; ++j) pi[j] = rep.leading_vector[j] / static_cast<double>(n);
    auto deflate = [&](std::vector<double>& u) {
        CompensatedSum s;
        for (std::size_t j = 0; j < n; ++j) s += pi[j] * u[j];
        const double c = s.value();
        for (auto& x : u) x -= c;
    };
    std::vector<double> u(n);
    for (auto& x : u) x = static_cast<double>(stream.uniform_int(1 << 20));
    deflate(u);
    auto norm2 = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double e : x) s += e * e;
        return std::sqrt(s);
    };
    // Rescaling by powers of two keeps the iterates exact.
    auto rescale = [](std::vector<double>& x, double norm) {
        int e = 0;
        std::frexp(norm, &e);
        for (auto& v : x) v = std::ldexp(v, -e);
    };
    double lambda2 = 0.0, last_ratio = -1.0;
    double prev = norm2(u);
    std::size_t k = 0;
    bool settled = prev == 0.0;
    for (; k < max_iterations && !settled; ++k) {
        u = p.apply(u);
        deflate(u);
        const double cur = norm2(u);
        if (cur == 0.0) {
            rep.nilpotency_index = k + 1;
            lambda2 = 0.0;
            settled = true;
            break;
        }
        lambda2 = cur / prev;
        rescale(u, cur);
        prev = norm2(u);
        if (k > 64 && std::abs(lambda2 - last_ratio) < 1e-14) settled = true;
        last_ratio = lambda2;
    }
    if (!settled) throw ConvergenceError("spectrum: subdominant modulus did not converge");
    rep.moduli = {std::abs(lambda1), std::abs(lambda2)};
    rep.gap = 1.0 - std::abs(lambda2);
    rep.iterations = it + k;
    return rep;
}

/// Shared Monte-Carlo accumulation over mu-distributed phi-orbits of length k_max + 1.
struct LagMoments {
    std::size_t samples = 0;
    std::size_t lags = 0;  ///< k_max + 1
    double shift = 0.0;
    std::vector<double> mean;           ///< per-lag mean of h o phi^k
    std::vector<double> covariance;     ///< Cov(h, h o phi^k)
    std::vector<double> standard_error; ///< of each covariance
    double series = 0.0;                ///< Cov(0) + 2 sum_{k >= 1} Cov(k)
    double series_standard_error = 0.0;
    std::size_t evaluations = 0;
    std::size_t flagged = 0;
};

namespace detail {

struct LagBlock {
    std::vector<CompensatedSum> h0;    // sum of (h0 - c)
    std::vector<CompensatedSum> hk;    // sum of (hk - c)
    std::vector<CompensatedSum> prod;  // sum of (h0 - c)(hk - c)
    std::vector<CompensatedSum> prod2; // sum of squares of the products
    CompensatedSum y, y2;              // per-orbit series statistic
    std::size_t flagged = 0;
};

}  // namespace detail

inline constexpr std::size_t kMonteCarloBlock = 1024;

inline LagMoments lag_moments(const ObservableSpec& spec, std::size_t k_max, std::size_t n_samples, std::uint64_t seed,
                              unsigned threads = 0, const ZetaConfig& cfg = {}) {
    if (n_samples < 2) throw DomainError("lag_moments: need at least 2 samples");
    const std::size_t lags = k_max + 1;
    auto orbit_values = [&](std::size_t i, std::vector<double>& h, std::size_t& flagged) {
        Stream stream = trial_stream(seed, i);
        double x = sample_mu(stream);
        for (std::size_t k = 0; k < lags; ++k) {
            const EvalResult r = eval_h(spec, x, cfg);
            h[k] = r.value;
            flagged += r.degraded ? 1 : 0;
            x = phi(x);
        }
    };

    // Centering shift from the first orbits (the same orbits reappear below).
    double shift = 0.0;
    {
        std::vector<double> h(lags);
        std::size_t dummy = 0;
        const std::size_t pilot = std::min<std::size_t>(n_samples, 256);
        CompensatedSum s;
        for (std::size_t i = 0; i < pilot; ++i) {
            orbit_values(i, h, dummy);
            for (double v : h) s += v;
        }
        shift = s.value() / static_cast<double>(pilot * lags);
    }

    const std::size_t blocks = (n_samples + kMonteCarloBlock - 1) / kMonteCarloBlock;
    std::vector<detail::LagBlock> acc(blocks);
    parallel_for(blocks, threads, [&](std::size_t b) {
        detail::LagBlock& blk = acc[b];
        blk.h0.resize(lags);
        blk.hk.resize(lags);
        blk.prod.resize(lags);
        blk.prod2.resize(lags);
        std::vector<double> h(lags);
        const std::size_t end = std::min(n_samples, (b + 1) * kMonteCarloBlock);
        for (std::size_t i = b * kMonteCarloBlock; i < end; ++i) {
            orbit_values(i, h, blk.flagged);
            const double a = h[0] - shift;
            double y = 0.0;
            for (std::size_t k = 0; k < lags; ++k) {
                const double c = h[k] - shift;
                const double p = a * c;
                blk.h0[k] += a;
                blk.hk[k] += c;
                blk.prod[k] += p;
                blk.prod2[k] += p * p;
                y += k == 0 ? p : 2.0 * p;
            }
            blk.y += y;
            blk.y2 += y * y;
        }
    });

    LagMoments out;
    out.samples = n_samples;
    out.lags = lags;
    out.shift = shift;
    out.evaluations = n_samples * lags;
    std::vector<CompensatedSum> h0(lags), hk(lags), prod(lags), prod2(lags);
    CompensatedSum y, y2;
    for (const auto& blk : acc) {
        for (std::size_t k = 0; k < lags; ++k) {
            h0[k].merge(blk.h0[k]);
            hk[k].merge(blk.hk[k]);
            prod[k].merge(blk.prod[k]);
            prod2[k].merge(blk.prod2[k]);
        }
        y.merge(blk.y);
        y2.merge(blk.y2);
        out.flagged += blk.flagged;
    }
    const double n = static_cast<double>(n_samples);
    out.mean.resize(lags);
    out.covariance.resize(lags);
    out.standard_error.resize(lags);
    CompensatedSum series;
    for (std::size_t k = 0; k < lags; ++k) {
        const double ma = h0[k].value() / n;
        const double mc = hk[k].value() / n;
        const double mp = prod[k].value() / n;
        out.mean[k] = mc + shift;
        out.covariance[k] = (mp - ma * mc) * n / (n - 1.0);
        const double var_p = std::max(0.0, prod2[k].value() / n - mp * mp);
        out.standard_error[k] = std::sqrt(var_p / n);
        series += k == 0 ? out.covariance[k] : 2.0 * out.covariance[k];
    }
    out.series = series.value();
    const double my = y.value() / n;
    out.series_standard_error = std::sqrt(std::max(0.0, y2.value() / n - my * my) / n);
    return out;
}

struct CorrelationReport {
    std::vector<double> covariance;
    std::vector<double> standard_error;
    std::size_t usable_lags = 0;
    bool fit_available = false;
    double theta = std::numeric_limits<double>::quiet_NaN();
    double amplitude = std::numeric_limits<double>::quiet_NaN();  ///< fitted |Cov(0)| surrogate
    std::size_t samples = 0;
    std::size_t flagged = 0;
    std::size_t evaluations = 0;
};

/**
 * Geometric fit |Cov(k)| ~ A theta^k over the leading run of lags whose
 * covariance exceeds three standard errors.
 */
inline CorrelationReport fit_correlation_decay(const LagMoments& mom) {
    CorrelationReport rep;
    rep.covariance = mom.covariance;
    rep.standard_error = mom.standard_error;
    rep.samples = mom.samples;
    rep.flagged = mom.flagged;
    rep.evaluations = mom.evaluations;
    std::vector<double> ks, logs;
    for (std::size_t k = 0; k < mom.covariance.size(); ++k) {
        const double c = std::abs(mom.covariance[k]);
        if (!(c > 3.0 * mom.standard_error[k]) || c == 0.0) break;
        ks.push_back(static_cast<double>(k));
        logs.push_back(std::log(c));
    }
    rep.usable_lags = ks.size();
    if (ks.size() >= 3) {
        const LinearFit fit = least_squares(ks, logs);
        rep.fit_available = true;
        rep.theta = std::exp(fit.slope);
        rep.amplitude = std::exp(fit.intercept);
    }
    return rep;
}

inline CorrelationReport correlation_decay(const ObservableSpec& spec, std::size_t k_max, std::size_t n_samples,
                                           std::uint64_t seed, unsigned threads = 0, const ZetaConfig& cfg = {}) {
    if (k_max < 2) throw DomainError("correlation_decay: k_max must be at least 2");
    return fit_correlation_decay(lag_moments(spec, k_max, n_samples, seed, threads, cfg));
}

}  // namespace ergozeta
