#pragma once

// Observables h on the real line, their pullbacks h~ = h o xi to (0, 1), the
// weight R_alpha, oscillations and the (alpha, beta) seminorm estimator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ergozeta/dynamics.hpp"
#include "ergozeta/errors.hpp"
#include "ergozeta/numeric.hpp"
#include "ergozeta/parallel.hpp"
#include "ergozeta/zeta.hpp"

namespace ergozeta {

enum class ObservableKind {
    ZetaRe,
    ZetaIm,
    ZetaAbs,
    Constant,    ///< "const:<c>"
    Digit,       ///< first binary digit of xi^-1(t): h~ = 1[x >= 1/2]
    Cosine,      ///< h~(x) = cos(2 pi x)
    Power,       ///< "power:<w>", h(t) = |t|^w
    Coboundary,  ///< g - g o phi with g(t) = 1 / (1 + t^2)
    Position,    ///< h~(x) = x
    Lorentz,     ///< h(t) = 1 / (1 + t^2)
    OddLorentz,  ///< h(t) = t / (1 + t^2)
};

/// Growth exponent w_s = (1 - s)/2 + delta_s with delta_s = s/4 - 1/12.
inline double zeta_growth_exponent(double s) { return (1.0 - s) / 2.0 + (s / 4.0 - 1.0 / 12.0); }

struct ObservableSpec {
    ObservableKind kind = ObservableKind::Constant;
    double s = 0.5;          ///< real part of the zeta argument (zeta kinds)
    double parameter = 0.0;  ///< constant value or power exponent
    double w = 0.0;          ///< declared growth exponent
    double scale = 1.0;      ///< multiplies every value

    static ObservableSpec zeta(ObservableKind kind, double s) {
        if (kind != ObservableKind::ZetaRe && kind != ObservableKind::ZetaIm && kind != ObservableKind::ZetaAbs)
            throw DomainError("ObservableSpec::zeta: not a zeta kind");
        if (!(s > 0.0 && s < 1.0)) throw DomainError("ObservableSpec: s must lie in (0, 1)");
        return {kind, s, 0.0, zeta_growth_exponent(s)};
    }
    static ObservableSpec constant(double c) { return {ObservableKind::Constant, 0.5, c, 0.0}; }
    static ObservableSpec builtin(ObservableKind kind) { return {kind, 0.5, 0.0, 0.0}; }
    static ObservableSpec power(double w) { return {ObservableKind::Power, 0.5, w, w}; }

    ObservableSpec scaled(double c) const {
        if (!std::isfinite(c)) throw DomainError("ObservableSpec::scaled: factor not finite");
        ObservableSpec out = *this;
        out.scale *= c;
        return out;
    }

    /// Accepts zeta-re, zeta-im, zeta-abs and the builtin names.
    static ObservableSpec parse(const std::string& text, double s = 0.5) {
        if (text == "zeta-re") return zeta(ObservableKind::ZetaRe, s);
        if (text == "zeta-im") return zeta(ObservableKind::ZetaIm, s);
        if (text == "zeta-abs") return zeta(ObservableKind::ZetaAbs, s);
        if (text == "digit") return builtin(ObservableKind::Digit);
        if (text == "cos") return builtin(ObservableKind::Cosine);
        if (text == "coboundary") return builtin(ObservableKind::Coboundary);
        if (text == "position") return builtin(ObservableKind::Position);
        if (text == "lorentz") return builtin(ObservableKind::Lorentz);
        if (text == "odd-lorentz") return builtin(ObservableKind::OddLorentz);
        auto number_after = [&](std::size_t prefix) {
            std::size_t used = 0;
            const std::string rest = text.substr(prefix);
            double v = 0.0;
            try {
                v = std::stod(rest, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != rest.size() || !std::isfinite(v))
                throw DomainError("observable '" + text + "': malformed number");
            return v;
        };
        if (text.rfind("const:", 0) == 0) return constant(number_after(6));
        if (text.rfind("power:", 0) == 0) {
            const double w = number_after(6);
            if (!(w >= 0.0)) throw DomainError("observable power exponent must be non-negative");
            return power(w);
        }
        throw DomainError("unknown observable '" + text + "'");
    }

    bool is_zeta() const {
        return kind == ObservableKind::ZetaRe || kind == ObservableKind::ZetaIm || kind == ObservableKind::ZetaAbs;
    }

    /// True when the zeta central limit theorem hypotheses hold (s in (1/3, 1)).
    bool within_clt_range() const { return !is_zeta() || (s > 1.0 / 3.0 && s < 1.0); }

    std::string name() const {
        switch (kind) {
            case ObservableKind::ZetaRe: return "zeta-re";
            case ObservableKind::ZetaIm: return "zeta-im";
            case ObservableKind::ZetaAbs: return "zeta-abs";
            case ObservableKind::Constant: return "const:" + std::to_string(parameter);
            case ObservableKind::Digit: return "digit";
            case ObservableKind::Cosine: return "cos";
            case ObservableKind::Power: return "power:" + std::to_string(parameter);
            case ObservableKind::Coboundary: return "coboundary";
            case ObservableKind::Position: return "position";
            case ObservableKind::Lorentz: return "lorentz";
            case ObservableKind::OddLorentz: return "odd-lorentz";
        }
        return "unknown";
    }
};

struct EvalResult {
    double value = 0.0;
    bool degraded = false;
};

/// h(t) for the observable described by spec.
namespace detail {
inline EvalResult eval_unscaled(const ObservableSpec& spec, double t, const ZetaConfig& cfg) {
    switch (spec.kind) {
        case ObservableKind::ZetaRe:
        case ObservableKind::ZetaIm:
        case ObservableKind::ZetaAbs: {
            const ZetaValue z = zeta_eval(Complex(spec.s, t), cfg);
            const double v = spec.kind == ObservableKind::ZetaRe   ? z.value.real()
                             : spec.kind == ObservableKind::ZetaIm ? z.value.imag()
                                                                   : std::abs(z.value);
            return {v, z.degraded};
        }
        case ObservableKind::Constant: return {spec.parameter, false};
        case ObservableKind::Digit: return {t <= 0.0 ? 1.0 : 0.0, false};
        case ObservableKind::Cosine: return {std::cos(2.0 * std::numbers::pi * xi_inverse(t)), false};
        case ObservableKind::Power: return {std::pow(std::abs(t), spec.parameter), false};
        case ObservableKind::Coboundary: {
            const double p = phi(t);
            return {1.0 / (1.0 + t * t) - 1.0 / (1.0 + p * p), false};
        }
        case ObservableKind::Position: return {xi_inverse(t), false};
        case ObservableKind::Lorentz: return {1.0 / (1.0 + t * t), false};
        case ObservableKind::OddLorentz: return {t / (1.0 + t * t), false};
    }
    return {};
}
}  // namespace detail

inline EvalResult eval_h(const ObservableSpec& spec, double t, const ZetaConfig& cfg = {}) {
    if (!std::isfinite(t)) throw DomainError("eval_h: argument not finite");
    EvalResult r = detail::eval_unscaled(spec, t, cfg);
    r.value *= spec.scale;
    return r;
}

/// h~(x) = h(xi(x)) on (0, 1).
inline EvalResult tilde_eval(const ObservableSpec& spec, double x, const ZetaConfig& cfg = {}) {
    return eval_h(spec, xi(x), cfg);
}

/// Callable wrappers, convenient for the seminorm and quadrature machinery.
inline std::function<double(double)> as_function(const ObservableSpec& spec, const ZetaConfig& cfg = {}) {
    return [spec, cfg](double t) { return eval_h(spec, t, cfg).value; };
}
inline std::function<double(double)> as_pullback(const ObservableSpec& spec, const ZetaConfig& cfg = {}) {
    return [spec, cfg](double x) { return tilde_eval(spec, x, cfg).value; };
}

/// Default (alpha, beta): for zeta, w + (1/3 - w)/3 and w + 2 (1/3 - w)/3, which
/// keeps w < alpha < beta < 1/3; otherwise (0.25, 0.30).
inline std::pair<double, double> default_exponents(const ObservableSpec& spec) {
    if (!spec.is_zeta()) return {0.25, 0.30};
    const double gap = 1.0 / 3.0 - spec.w;
    return {spec.w + gap / 3.0, spec.w + 2.0 * gap / 3.0};
}

/// R_alpha f(x) = x^alpha (1 - x)^alpha f(x), taken as 0 at the endpoints.
template <class F>
double r_alpha(F&& f, double alpha, double x) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("r_alpha: alpha must lie in (0, 1)");
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::pow(x * (1.0 - x), alpha) * f(x);
}

/// sup - inf of f over `resolution` equally spaced points of [a, b] (a lower bound of the true oscillation).
template <class F>
double oscillation(F&& f, double a, double b, std::size_t resolution) {
    if (resolution < 2) throw DomainError("oscillation: resolution must be at least 2");
    if (a > b) return 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < resolution; ++i) {
        const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(resolution - 1);
        const double v = f(x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

struct SeminormOptions {
    std::vector<double> schedule = default_schedule();
    std::size_t points_per_ball = 32;
    unsigned threads = 0;

    /// epsilon = 2^-k for k = 4 .. 14.
    static std::vector<double> default_schedule() {
        std::vector<double> s;
        for (int k = 4; k <= 14; ++k) s.push_back(std::ldexp(1.0, -k));
        return s;
    }
};

struct SeminormEstimate {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> schedule;
    std::vector<double> per_epsilon;  ///< integral of osc(R_alpha f, B_eps(x)) dx / eps^beta
    double value = 0.0;               ///< max over the tail; +inf when flagged
    bool infinite = false;
    double tail_slope = 0.0;          ///< d log(value) / d log(1/eps) over the tail
    std::size_t grid_points = 0;      ///< sample points on [0, 1]
    std::size_t points_per_ball = 0;

    std::size_t tail_begin() const { return per_epsilon.size() - std::max<std::size_t>(1, per_epsilon.size() / 3); }

    double tail_median() const {
        std::vector<double> tail(per_epsilon.begin() + static_cast<std::ptrdiff_t>(tail_begin()), per_epsilon.end());
        std::sort(tail.begin(), tail.end());
        if (tail.empty()) return 0.0;
        const std::size_t m = tail.size() / 2;
        return tail.size() % 2 ? tail[m] : 0.5 * (tail[m - 1] + tail[m]);
    }

    double tail_max() const {
        double m = 0.0;
        for (std::size_t i = tail_begin(); i < per_epsilon.size(); ++i) m = std::max(m, per_epsilon[i]);
        return m;
    }
};

/// Smallest tail growth power that marks the per-epsilon sequence as divergent.
inline constexpr double kSeminormDivergenceSlope = 0.05;

namespace detail {

/// Ball oscillation profile: for every grid point, max - min over the window [i - w, i + w].
inline std::vector<double> sliding_oscillation(std::span<const double> g, std::size_t w) {
    const std::size_t n = g.size();
    std::vector<double> out(n);
    std::deque<std::size_t> maxq, minq;
    std::size_t right = 0;  // next index to enter
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t hi = std::min(n - 1, i + w);
        while (right <= hi) {
            while (!maxq.empty() && g[maxq.back()] <= g[right]) maxq.pop_back();
            maxq.push_back(right);
            while (!minq.empty() && g[minq.back()] >= g[right]) minq.pop_back();
            minq.push_back(right);
            ++right;
        }
        const std::size_t lo = i >= w ? i - w : 0;
        while (maxq.front() < lo) maxq.pop_front();
        while (minq.front() < lo) minq.pop_front();
        out[i] = g[maxq.front()] - g[minq.front()];
    }
    return out;
}

inline SeminormEstimate finish_seminorm(SeminormEstimate est) {
    const std::size_t begin = est.tail_begin();
    std::vector<double> lx, ly;
    bool overflow = false;
    for (std::size_t i = 0; i < est.per_epsilon.size(); ++i) {
        if (!std::isfinite(est.per_epsilon[i]) || est.per_epsilon[i] > 1e6) overflow = true;
        if (i >= begin && est.per_epsilon[i] > 0.0) {
            lx.push_back(-std::log(est.schedule[i]));
            ly.push_back(std::log(est.per_epsilon[i]));
        }
    }
    est.tail_slope = lx.size() >= 2 ? least_squares(lx, ly).slope : 0.0;
    // Divergence: the tail keeps growing like eps^-p with a visible power p.
    bool increasing = est.per_epsilon.size() - begin >= 2;
    for (std::size_t i = begin + 1; i < est.per_epsilon.size(); ++i)
        increasing = increasing && est.per_epsilon[i] > est.per_epsilon[i - 1];
    const bool diverging = increasing && est.tail_slope > kSeminormDivergenceSlope;
    est.infinite = overflow || diverging;
    est.value = est.infinite ? std::numeric_limits<double>::infinity() : est.tail_max();
    return est;
}

}  // namespace detail

/**
 * Estimate of |f|_{alpha,beta}: for each eps in the schedule, the integral over
 * [0, 1] of osc(R_alpha f, B_eps(x)) divided by eps^beta.
 *
 * R_alpha f is sampled once on a uniform grid fine enough to put
 * `points_per_ball` samples in the smallest ball; ball oscillations are sliding
 * window extrema over that grid and the outer integral is the trapezoid rule on
 * the same points. The limsup is replaced by the maximum over the last third of
 * the schedule.
 */
template <class F>
SeminormEstimate seminorm_estimate(F&& f, double alpha, double beta, const SeminormOptions& opts = {}) {
    if (!(alpha > 0.0 && alpha < beta && beta <= 1.0)) throw DomainError("seminorm_estimate: need 0 < alpha < beta <= 1");
    if (opts.schedule.empty()) throw DomainError("seminorm_estimate: empty schedule");
    for (std::size_t i = 1; i < opts.schedule.size(); ++i)
        if (!(opts.schedule[i] < opts.schedule[i - 1])) throw DomainError("seminorm_estimate: schedule must decrease");
    if (opts.points_per_ball < 32) throw DomainError("seminorm_estimate: need at least 32 points per ball");

    const double eps_min = opts.schedule.back();
    const double spacing_target = 2.0 * eps_min / static_cast<double>(opts.points_per_ball);
    const std::size_t intervals = static_cast<std::size_t>(std::ceil(1.0 / spacing_target));
    const double spacing = 1.0 / static_cast<double>(intervals);

    std::vector<double> g(intervals + 1);
    const std::size_t chunk = 4096;
    parallel_for((g.size() + chunk - 1) / chunk, opts.threads, [&](std::size_t c) {
        const std::size_t end = std::min(g.size(), (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) g[i] = r_alpha(f, alpha, static_cast<double>(i) * spacing);
    });

    SeminormEstimate est;
    est.alpha = alpha;
    est.beta = beta;
    est.schedule = opts.schedule;
    est.grid_points = g.size();
    est.points_per_ball = opts.points_per_ball;
    est.per_epsilon.resize(opts.schedule.size());
    parallel_for(opts.schedule.size(), opts.threads, [&](std::size_t k) {
        const double eps = opts.schedule[k];
        const auto w = static_cast<std::size_t>(std::floor(eps / spacing));
        const std::vector<double> osc = detail::sliding_oscillation(g, w);
        CompensatedSum s;
        for (std::size_t i = 0; i < osc.size(); ++i) s += (i == 0 || i + 1 == osc.size()) ? 0.5 * osc[i] : osc[i];
        est.per_epsilon[k] = s.value() * spacing / std::pow(eps, beta);
    });
    return detail::finish_seminorm(std::move(est));
}

/// Integral over (0, 1) with geometric refinement toward both endpoints.
/// `max_refinement` caps the bisection depth inside each panel; pullbacks of
/// zeta oscillate faster with each panel toward the ends, so the cap is what
/// bounds their cost.
template <class F>
IntegralEstimate integrate_unit_interval(F&& f, int depth = 30, double relative_tolerance = 1e-10,
                                         unsigned max_refinement = 18) {
    IntegralEstimate total;
    CompensatedSum value;
    auto add = [&](double a, double b) {
        const IntegralEstimate piece = gauss_kronrod(f, a, b, relative_tolerance, max_refinement);
        value += piece.value;
        total.error += piece.error;
        return piece.value;
    };
    add(0.25, 0.75);
    double left = 0.0, right = 0.0, left_prev = 0.0, right_prev = 0.0;
    for (int k = 2; k <= depth; ++k) {
        const double hi = std::ldexp(1.0, -k);
        const double lo = std::ldexp(1.0, -k - 1);
        left_prev = std::exchange(left, add(lo, hi));
        right_prev = std::exchange(right, add(1.0 - hi, 1.0 - lo));
    }
    // Uncovered end pieces, extrapolated from the last panels and counted as error too.
    const double tail = geometric_tail(left_prev, left) + geometric_tail(right_prev, right);
    value += tail;
    total.error += std::abs(tail);
    total.value = value.value();
    return total;
}

struct NormsRecord {
    double l1 = 0.0;
    double l2 = 0.0;
    SeminormEstimate seminorm;
    double norm_ab = 0.0;        ///< ||f||_2 + |f|_{alpha,beta}
    double norm_ab_prime = 0.0;  ///< ||f||_1 + |f|_{alpha,beta}
};

template <class F>
NormsRecord norms(F&& f, double alpha, double beta, const SeminormOptions& opts = {}, int depth = 30,
                  unsigned max_refinement = 18) {
    NormsRecord r;
    r.l1 = integrate_unit_interval([&](double x) { return std::abs(f(x)); }, depth, 1e-10, max_refinement).value;
    r.l2 = std::sqrt(integrate_unit_interval([&](double x) {
                         const double v = f(x);
                         return v * v;
                     }, depth, 1e-10, max_refinement).value);
    r.seminorm = seminorm_estimate(f, alpha, beta, opts);
    r.norm_ab = r.l2 + r.seminorm.value;
    r.norm_ab_prime = r.l1 + r.seminorm.value;
    return r;
}

/// E(f | B_m): f averaged over each dyadic bin of width 2^-m.
class DyadicFunction {
public:
    DyadicFunction(int m, std::vector<double> values) : m_(m), values_(std::move(values)) {}

    int level() const { return m_; }
    const std::vector<double>& values() const { return values_; }

    double operator()(double x) const {
        const auto bins = static_cast<double>(values_.size());
        auto i = static_cast<std::size_t>(std::clamp(std::floor(x * bins), 0.0, bins - 1.0));
        return values_[i];
    }

private:
    int m_;
    std::vector<double> values_;
};

template <class F>
DyadicFunction dyadic_average(F&& f, int m) {
    if (m < 1 || m > 24) throw DomainError("dyadic_average: level must be in [1, 24]");
    const std::size_t bins = std::size_t{1} << m;
    const double width = 1.0 / static_cast<double>(bins);
    std::vector<double> values(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        const double a = static_cast<double>(i) * width;
        const double b = a + width;
        double integral = 0.0;
        if (i == 0 || i + 1 == bins) {
            // Endpoint bins: geometric refinement toward the singular end.
            const bool left = i == 0;
            CompensatedSum s;
            double outer = width, prev = 0.0, last = 0.0;
            for (int k = 0; k < 40; ++k) {
                const double inner = outer / 2.0;
                prev = std::exchange(last, left ? gauss_legendre(f, inner, outer)
                                                : gauss_legendre(f, 1.0 - outer, 1.0 - inner));
                s += last;
                outer = inner;
            }
            s += geometric_tail(prev, last);
            integral = s.value();
        } else {
            integral = gauss_legendre(f, a, b);
        }
        values[i] = integral / width;
    }
    return DyadicFunction(m, std::move(values));
}

struct GrowthCheck {
    double value_exponent = 0.0;
    double derivative_exponent = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/**
 * Envelope exponents of |h| and of a central-difference |h'| over t_grid.
 * Passes when both stay below min(w + 0.05, 1/3), the admissible growth for
 * the central limit theorem.
 */
inline GrowthCheck growth_check(const ObservableSpec& spec, std::span<const double> t_grid, const ZetaConfig& cfg = {},
                                double step = 1e-3) {
    if (t_grid.size() < 2) throw DomainError("growth_check: grid too small");
    const ZetaConfig wide = cfg.covering(*std::max_element(t_grid.begin(), t_grid.end()) + step);
    std::vector<double> values(t_grid.size()), slopes(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        values[i] = eval_h(spec, t, wide).value;
        slopes[i] = (eval_h(spec, t + step, wide).value - eval_h(spec, t - step, wide).value) / (2.0 * step);
    }
    GrowthCheck out;
    out.value_exponent = envelope_exponent(t_grid, values).exponent;
    out.derivative_exponent = envelope_exponent(t_grid, slopes).exponent;
    out.threshold = std::min(spec.w + 0.05, 1.0 / 3.0);
    out.pass = out.value_exponent < out.threshold && out.derivative_exponent < out.threshold;
    return out;
}

}  // namespace ergozeta
