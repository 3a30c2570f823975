#pragma once

// Birkhoff sums along phi-orbits, mu-expectations, the asymptotic variance,
// Monte-Carlo CLT experiments, strong-law checks and periodic-cycle sums.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ergozeta/dynamics.hpp"
#include "ergozeta/errors.hpp"
#include "ergozeta/numeric.hpp"
#include "ergozeta/observables.hpp"
#include "ergozeta/parallel.hpp"
#include "ergozeta/rng.hpp"
#include "ergozeta/transfer.hpp"

namespace ergozeta {

struct BirkhoffSum {
    double value = 0.0;
    std::size_t flagged = 0;
};

/// S_n(x0) = sum_{j < n} h(phi^j(x0)), compensated.
inline BirkhoffSum birkhoff_sum(const ObservableSpec& spec, double x0, std::size_t n, const ZetaConfig& cfg = {}) {
    if (n == 0) throw DomainError("birkhoff_sum: n must be positive");
    if (!std::isfinite(x0)) throw DomainError("birkhoff_sum: start not finite");
    CompensatedSum s;
    BirkhoffSum out;
    double x = x0;
    for (std::size_t j = 0; j < n; ++j) {
        const EvalResult r = eval_h(spec, x, cfg);
        s += r.value;
        out.flagged += r.degraded ? 1 : 0;
        x = phi(x);
    }
    out.value = s.value();
    return out;
}

struct ExpectationEstimate {
    double value = 0.0;
    double error = 0.0;       ///< quadrature error plus the tail extrapolation uncertainty
    double tail = 0.0;        ///< extrapolated contribution of (0, 2^-depth-1) and its mirror
    int depth = 0;
};

/// Default relative tolerance: tight for the closed-form builtins, looser for
/// zeta. One zeta panel costs about 4^depth, and the extrapolated tail of
/// |zeta| dominates the error budget at depth 10.
inline double default_expectation_tolerance(const ObservableSpec& spec) { return spec.is_zeta() ? 1e-3 : 1e-8; }

/// Default refinement depth: x down to 2^-depth-1 on each side.
inline int default_expectation_depth(const ObservableSpec& spec) { return spec.is_zeta() ? 10 : 38; }

/**
 * E_mu h = integral of h~ over (0, 1).
 *
 * The middle [1/4, 3/4] and the dyadic panels [2^-j-1, 2^-j] and their mirror
 * images up to j = depth are integrated by adaptive Gauss-Kronrod. The rest is
 * extrapolated from a straight-line fit of the panel means against j over the
 * last four panels, or geometrically for power observables. Throws ConvergenceError when the combined error estimate
 * exceeds tolerance * max(1, |value|).
 */
inline ExpectationEstimate expectation_quadrature(const ObservableSpec& spec, double tolerance = 0.0, int depth = 0,
                                                  const ZetaConfig& cfg = {}) {
    if (spec.kind == ObservableKind::Power && !(spec.parameter < 1.0))
        throw DomainError("expectation_quadrature: growth exponent must be below 1");
    if (tolerance <= 0.0) tolerance = default_expectation_tolerance(spec);
    if (depth <= 0) depth = default_expectation_depth(spec);
    if (depth < 6 || depth > 38) throw DomainError("expectation_quadrature: depth must lie in [6, 38]");

    auto f = [&](double x) { return tilde_eval(spec, x, cfg).value; };
    const double panel_tol = tolerance * 1e-2;
    ExpectationEstimate est;
    est.depth = depth;
    CompensatedSum total;
    double error = 0.0;
    const IntegralEstimate middle = gauss_kronrod(f, 0.25, 0.75, panel_tol);
    total += middle.value;
    error += middle.error;
    std::vector<double> js, means, pieces;
    for (int j = 2; j <= depth; ++j) {
        const double hi = std::ldexp(1.0, -j);
        const double lo = std::ldexp(1.0, -j - 1);
        const IntegralEstimate left = gauss_kronrod(f, lo, hi, panel_tol);
        const IntegralEstimate right = gauss_kronrod(f, 1.0 - hi, 1.0 - lo, panel_tol);
        total += left.value;
        total += right.value;
        error += left.error + right.error;
        if (j > depth - 4) {
            js.push_back(static_cast<double>(j));
            means.push_back((left.value + right.value) / (hi - lo));
            pieces.push_back(left.value + right.value);
        }
    }
    double tail_error = 0.0;
    if (spec.kind == ObservableKind::Power) {
        // |cot(pi x)|^w behaves like x^-w, so the panel integrals shrink by 2^(w-1):
        // geometric remainder, judged by how much the last two ratios disagree.
        est.tail = geometric_tail(pieces[2], pieces[3]);
        tail_error = std::abs(est.tail - geometric_tail(pieces[1], pieces[2]) * pieces[3] / pieces[2]);
    } else {
        // Sum over j > depth of 2^-j-1 (a + b j) = 2^-depth-1 (a + b (depth + 2)).
        const LinearFit fit = least_squares(js, means);
        const double scale = std::ldexp(1.0, -depth - 1);
        est.tail = scale * (fit.intercept + fit.slope * (depth + 2));
        tail_error = std::abs(est.tail - scale * means.back());
    }
    total += est.tail;
    est.value = total.value();
    est.error = error + tail_error;
    if (!(est.error <= tolerance * std::max(1.0, std::abs(est.value))))
        throw ConvergenceError("expectation_quadrature: error estimate " + std::to_string(est.error) +
                               " above tolerance");
    return est;
}

struct Sigma2Estimate {
    double value = 0.0;
    double standard_error = 0.0;
    double truncation_tail = 0.0;  ///< geometric extrapolation beyond k_max (0 without a fit)
    CorrelationReport correlations;
    std::size_t evaluations = 0;
    std::size_t flagged = 0;
};

/**
 * sigma^2 = V(h) + 2 sum_{k=1}^{k_max} Cov(h, h o phi^k) from Monte-Carlo
 * covariances. With a decay fit the geometric remainder beyond k_max is added
 * to the estimate and its size to the standard error; without one the series
 * is simply truncated.
 */
inline Sigma2Estimate sigma2_series(const ObservableSpec& spec, std::size_t k_max, std::size_t n_samples,
                                    std::uint64_t seed, unsigned threads = 0, const ZetaConfig& cfg = {}) {
    if (k_max < 1) throw DomainError("sigma2_series: k_max must be at least 1");
    const LagMoments mom = lag_moments(spec, k_max, n_samples, seed, threads, cfg);
    Sigma2Estimate out;
    out.value = mom.series;
    out.standard_error = mom.series_standard_error;
    out.evaluations = mom.evaluations;
    out.flagged = mom.flagged;
    if (k_max >= 2) out.correlations = fit_correlation_decay(mom);
    const CorrelationReport& c = out.correlations;
    if (c.fit_available && c.theta < 1.0) {
        const double sign = mom.covariance[c.usable_lags - 1] < 0.0 ? -1.0 : 1.0;
        out.truncation_tail =
            sign * 2.0 * c.amplitude * std::pow(c.theta, static_cast<double>(k_max + 1)) / (1.0 - c.theta);
        out.value += out.truncation_tail;
        out.standard_error += std::abs(out.truncation_tail);
    }
    return out;
}

/// Kolmogorov-Smirnov distances of a sample to a continuous CDF.
struct KsDistance {
    double classical = 0.0;  ///< sup |F_n - F|
    double mid = 0.0;        ///< sup |(F_n + F_n-)/2 - F|, insensitive to ties
};

template <class Cdf>
KsDistance ks_distance(std::vector<double> sample, Cdf&& cdf) {
    KsDistance d;
    if (sample.empty()) return d;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    for (std::size_t i = 0; i < sample.size();) {
        std::size_t j = i;
        while (j < sample.size() && sample[j] == sample[i]) ++j;
        const double f = cdf(sample[i]);
        const double below = static_cast<double>(i) / n;
        const double upto = static_cast<double>(j) / n;
        d.classical = std::max({d.classical, std::abs(upto - f), std::abs(below - f)});
        d.mid = std::max(d.mid, std::abs(0.5 * (below + upto) - f));
        i = j;
    }
    return d;
}

struct CltReport {
    std::size_t n = 0;
    std::size_t trials = 0;
    double mean = 0.0;                 ///< of S_n over trials
    double variance = 0.0;             ///< sample variance of S_n
    double sigma2_empirical = 0.0;     ///< variance / n
    double sigma2_standard_error = 0.0;
    std::vector<double> normalized;    ///< (S_n - mean) / sqrt(n), in trial order
    double normalized_min = 0.0;
    double normalized_max = 0.0;
    KsDistance ks;                     ///< against N(0, sigma2_empirical)
    bool degenerate = false;           ///< sigma2_empirical < 1e-3
    double mass_within = 0.0;          ///< fraction of |normalized| < 0.1
    std::size_t evaluations = 0;
    std::size_t flagged = 0;

    double flagged_fraction() const {
        return evaluations == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(evaluations);
    }
    bool clean() const { return flagged_fraction() < 1e-3; }
};

inline constexpr double kDegenerateVariance = 1e-3;
inline constexpr double kDegenerateWindow = 0.1;

inline CltReport clt_experiment(const ObservableSpec& spec, std::size_t n, std::size_t trials, std::uint64_t seed,
                                unsigned threads = 0, const ZetaConfig& cfg = {}) {
    if (n < 100) throw DomainError("clt_experiment: n must be at least 100");
    if (trials < 100) throw DomainError("clt_experiment: trials must be at least 100");
    std::vector<BirkhoffSum> sums(trials);
    parallel_for(trials, threads, [&](std::size_t i) {
        Stream stream = trial_stream(seed, i);
        sums[i] = birkhoff_sum(spec, sample_mu(stream), n, cfg);
    });

    CltReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.evaluations = n * trials;
    CompensatedSum total;
    for (const auto& s : sums) {
        total += s.value;
        rep.flagged += s.flagged;
    }
    const double count = static_cast<double>(trials);
    rep.mean = total.value() / count;
    CompensatedSum m2, m4;
    for (const auto& s : sums) {
        const double d = s.value - rep.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    rep.variance = m2.value() / (count - 1.0);
    rep.sigma2_empirical = rep.variance / static_cast<double>(n);
    const double mu2 = m2.value() / count;
    const double mu4 = m4.value() / count;
    const double kurtosis = mu2 > 0.0 ? mu4 / (mu2 * mu2) : 0.0;
    rep.sigma2_standard_error = rep.sigma2_empirical * std::sqrt(std::max(0.0, kurtosis - 1.0) / count);

    const double root_n = std::sqrt(static_cast<double>(n));
    rep.normalized.reserve(trials);
    std::size_t inside = 0;
    for (const auto& s : sums) {
        const double z = (s.value - rep.mean) / root_n;
        rep.normalized.push_back(z);
        inside += std::abs(z) < kDegenerateWindow ? 1 : 0;
    }
    rep.normalized_min = *std::min_element(rep.normalized.begin(), rep.normalized.end());
    rep.normalized_max = *std::max_element(rep.normalized.begin(), rep.normalized.end());
    rep.mass_within = static_cast<double>(inside) / count;
    rep.degenerate = rep.sigma2_empirical < kDegenerateVariance;
    if (rep.sigma2_empirical > 0.0) {
        const double v = rep.sigma2_empirical;
        rep.ks = ks_distance(rep.normalized, [v](double x) { return normal_cdf(x, v); });
    }
    return rep;
}

struct StrongLawReport {
    double birkhoff_mean = 0.0;    ///< average of S_n / n over trials
    double standard_error = 0.0;   ///< cross-trial
    double quadrature_mean = 0.0;
    double quadrature_error = 0.0;
    double z = 0.0;
    std::size_t evaluations = 0;
    std::size_t flagged = 0;
};

inline StrongLawReport strong_law_check(const ObservableSpec& spec, std::size_t n, std::size_t trials,
                                        std::uint64_t seed, unsigned threads = 0, const ZetaConfig& cfg = {}) {
    if (n < 1000) throw DomainError("strong_law_check: n must be at least 1000");
    if (trials < 2) throw DomainError("strong_law_check: need at least 2 trials");
    std::vector<BirkhoffSum> sums(trials);
    parallel_for(trials, threads, [&](std::size_t i) {
        Stream stream = trial_stream(seed, i);
        sums[i] = birkhoff_sum(spec, sample_mu(stream), n, cfg);
    });
    StrongLawReport rep;
    rep.evaluations = n * trials;
    CompensatedSum total;
    for (const auto& s : sums) {
        total += s.value / static_cast<double>(n);
        rep.flagged += s.flagged;
    }
    const double count = static_cast<double>(trials);
    rep.birkhoff_mean = total.value() / count;
    CompensatedSum dev;
    for (const auto& s : sums) {
        const double d = s.value / static_cast<double>(n) - rep.birkhoff_mean;
        dev += d * d;
    }
    rep.standard_error = std::sqrt(dev.value() / (count - 1.0) / count);
    const ExpectationEstimate e = expectation_quadrature(spec, 0.0, 0, cfg);
    rep.quadrature_mean = e.value;
    rep.quadrature_error = e.error;
    const double diff = rep.birkhoff_mean - rep.quadrature_mean;
    rep.z = diff == 0.0 ? 0.0
            : rep.standard_error > 0.0 ? diff / rep.standard_error
                                       : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return rep;
}

struct CoboundaryReport {
    RationalCycle cycle;
    ObservableSpec observable;
    double cycle_sum = 0.0;
    bool nonzero = false;  ///< |cycle_sum| > 1e-6: not a coboundary with continuous transfer function
    std::size_t flagged = 0;
};

inline constexpr double kCoboundaryTolerance = 1e-6;

inline CoboundaryReport coboundary_cycle_sum(const ObservableSpec& spec, const RationalCycle& cycle,
                                             const ZetaConfig& cfg = {}) {
    if (!cycle.closes()) throw DomainError("coboundary_cycle_sum: cycle does not close");
    CoboundaryReport rep{cycle, spec, 0.0, false, 0};
    CompensatedSum s;
    for (const double t : cycle.phi_points()) {
        const EvalResult r = eval_h(spec, t, cfg);
        s += r.value;
        rep.flagged += r.degraded ? 1 : 0;
    }
    rep.cycle_sum = s.value();
    rep.nonzero = std::abs(rep.cycle_sum) > kCoboundaryTolerance;
    return rep;
}

}  // namespace ergozeta
