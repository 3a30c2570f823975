#pragma once

// The Boolean-type map phi on the real line, the doubling map psi on [0, 1],
// the conjugacy xi(x) = cot(pi x) between them and the Cauchy invariant measure.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "ergozeta/errors.hpp"
#include "ergozeta/rng.hpp"

namespace ergozeta {

enum class MapKind { Phi, Psi };

/// Points closer than this to 0 or 1 are rejected by xi.
inline constexpr double kEndpointGuard = 1e-12;

/// phi(x) = (x - 1/x) / 2, with phi(0) = 0.
inline double phi(double x) {
    if (x == 0.0) return 0.0;
    return 0.5 * (x - 1.0 / x);
}

/// psi(x) = 2x mod 1 on [0, 1].
inline double psi(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("psi: argument outside [0, 1]");
    const double y = 2.0 * x;
    return y - std::floor(y);
}

/**
 * xi(x) = cot(pi x) on (0, 1).
 *
 * The argument is folded to y = min(x, 1 - x) (exact in binary floating point
 * for x >= 1/2). For y <= 1/4 the ratio cos/sin keeps full relative accuracy
 * near the pole; for y in (1/4, 1/2] the form tan(pi (1/2 - y)) is used so that
 * xi(1/2) is exactly zero.
 */
inline double xi(double x) {
    if (!(x > kEndpointGuard && x < 1.0 - kEndpointGuard))
        throw DomainError("xi: argument not inside (0, 1) away from the poles");
    const bool upper = x > 0.5;
    const double y = upper ? 1.0 - x : x;
    double c;
    if (y <= 0.25) {
        const double a = std::numbers::pi * y;
        c = std::cos(a) / std::sin(a);
    } else {
        c = std::tan(std::numbers::pi * (0.5 - y));
    }
    return upper ? -c : c;
}

/// The unique x in (0, 1) with cot(pi x) = t.
inline double xi_inverse(double t) {
    if (!std::isfinite(t)) throw DomainError("xi_inverse: argument not finite");
    return std::atan2(1.0, t) / std::numbers::pi;
}

/// Cauchy quantile tan(pi (u - 1/2)) for u in (0, 1).
inline double cauchy_quantile(double u) { return std::tan(std::numbers::pi * (u - 0.5)); }

/// One draw from mu(dx) = dx / (pi (1 + x^2)).
inline double sample_mu(Stream& stream) { return cauchy_quantile(stream.uniform_open()); }

/// Cauchy CDF.
inline double mu_cdf(double x) { return 0.5 + std::atan(x) / std::numbers::pi; }

inline double apply_map(MapKind map, double x) { return map == MapKind::Phi ? phi(x) : psi(x); }

/// [x0, map(x0), ..., map^(n-1)(x0)].
inline std::vector<double> orbit(double x0, std::size_t n, MapKind map) {
    if (n == 0) throw DomainError("orbit: length must be positive");
    if (map == MapKind::Psi && !(x0 >= 0.0 && x0 <= 1.0)) throw DomainError("orbit: psi start outside [0, 1]");
    std::vector<double> out;
    out.reserve(n);
    double x = x0;
    out.push_back(x);
    for (std::size_t j = 1; j < n; ++j) {
        x = apply_map(map, x);
        out.push_back(x);
    }
    return out;
}

/// |phi(xi(x)) - xi(psi(x))|, for x at least 1e-9 away from 0, 1/2 and 1.
inline double conjugacy_defect(double x) {
    constexpr double guard = 1e-9;
    if (!(x > guard && x < 1.0 - guard) || std::abs(x - 0.5) < guard)
        throw DomainError("conjugacy_defect: argument too close to a pole or the branch point");
    return std::abs(phi(xi(x)) - xi(psi(x)));
}

/// Exact rational p/q.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

/// Exact doubling mod 1 of p/q.
inline Rational double_mod_one(Rational r) { return {(2 * r.num) % r.den, r.den}; }

/// A periodic orbit of the doubling map made of rationals with odd denominator.
struct RationalCycle {
    std::uint64_t denominator = 1;
    std::vector<Rational> points;

    std::size_t period() const { return points.size(); }

    /// The same cycle transported to the real line, xi(p/q) for each point.
    std::vector<double> phi_points() const {
        std::vector<double> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(xi(p.value()));
        return out;
    }

    bool closes() const { return !points.empty() && double_mod_one(points.back()) == points.front(); }
};

/// The psi-orbit of p/q, computed in exact arithmetic until its first return.
inline RationalCycle periodic_cycle(std::uint64_t p, std::uint64_t q) {
    if (q == 0 || q % 2 == 0) throw DomainError("periodic_cycle: denominator must be odd");
    if (!(p > 0 && p < q)) throw DomainError("periodic_cycle: need 0 < p < q");
    if (std::gcd(p, q) != 1) throw DomainError("periodic_cycle: p/q must be in lowest terms");
    if (q > (std::uint64_t{1} << 62)) throw DomainError("periodic_cycle: denominator too large");
    RationalCycle cycle{q, {}};
    Rational r{p, q};
    do {
        cycle.points.push_back(r);
        r = double_mod_one(r);
    } while (r.num != p);
    return cycle;
}

}  // namespace ergozeta
