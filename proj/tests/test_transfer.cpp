#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ergozeta/transfer.hpp"

using namespace ergozeta;

namespace {

constexpr std::size_t kRes = std::size_t{1} << 14;
const double kTwoPi = 2.0 * std::numbers::pi;

GridFunction grid(double (*f)(double), std::size_t n = kRes) { return GridFunction::sample(f, n); }

double one(double) { return 1.0; }
double ident(double x) { return x; }
double cos2pi(double x) { return std::cos(kTwoPi * x); }
double sin2pi(double x) { return std::sin(kTwoPi * x); }
// Indicator of [1/2, 1] with the midpoint value at the jump.
double step(double x) { return x > 0.5 ? 1.0 : (x == 0.5 ? 0.5 : 0.0); }
double sign_half(double x) { return x > 0.5 ? 1.0 : (x == 0.5 ? 0.0 : -1.0); }

SeminormOptions single_thread() {
    SeminormOptions o;
    o.threads = 1;
    return o;
}

}  // namespace

TEST(GridFunction, Invariants) {
    EXPECT_THROW(GridFunction(std::vector<double>{1.0, 2.0}), DomainError);
    EXPECT_THROW(GridFunction(std::vector<double>{1.0, NAN, 2.0}), DomainError);
    const auto g = grid(ident, 8);
    EXPECT_EQ(g.resolution(), 8u);
    EXPECT_DOUBLE_EQ(g.at(0.3), 0.3);
}

TEST(ApplyTransfer, Examples) {
    const auto t1 = apply_transfer(grid(one));
    for (double v : t1.values()) EXPECT_EQ(v, 1.0);

    const auto tx = apply_transfer(grid(ident));
    for (std::size_t i = 0; i <= kRes; ++i) {
        const double x = static_cast<double>(i) / kRes;
        EXPECT_NEAR(tx[i], x / 2.0 + 0.25, 1e-15);
    }
    EXPECT_THROW(apply_transfer(grid(ident, 7)), DomainError);
}

TEST(ApplyTransfer, CosineAgainstIdentityAdjoint) {
    // integral cos(2 pi x) (2x mod 1) dx = integral (psi^ cos)(x) x dx; psi^ cos(2 pi .) = 0 exactly,
    // and the left side is 0 as well.
    const auto f = grid(cos2pi);
    const auto tf = apply_transfer(f);
    for (double v : tf.values()) EXPECT_NEAR(v, 0.0, 1e-8);
    EXPECT_LT(adjoint_residual(f, grid(ident)), 1e-8);
}

TEST(ApplyTransfer, Linearity) {
    const double a = 1.7, b = -0.4;
    const auto f = grid(cos2pi), g = grid(step);
    std::vector<double> combo(kRes + 1);
    for (std::size_t i = 0; i <= kRes; ++i) combo[i] = a * f[i] + b * g[i];
    const auto lhs = apply_transfer(GridFunction(combo));
    const auto tf = apply_transfer(f), tg = apply_transfer(g);
    for (std::size_t i = 0; i <= kRes; ++i) EXPECT_NEAR(lhs[i], a * tf[i] + b * tg[i], 1e-12);
}

TEST(ApplyTransfer, Positivity) {
    Stream rng(15, 0);
    std::vector<double> v(1025);
    for (auto& x : v) x = rng.uniform_open() * (rng.uniform_open() < 0.3 ? 0.0 : 1.0);
    const auto t = apply_transfer(GridFunction(v));
    for (double x : t.values()) EXPECT_GE(x, 0.0);
}

TEST(ApplyTransfer, PreservesIntegral) {
    for (auto f : {cos2pi, ident, step, sign_half}) {
        const auto g = grid(f);
        EXPECT_NEAR(integrate(apply_transfer(g)), integrate(g), 1e-9);
    }
}

TEST(ApplyTransfer, MatchesContinuousOperatorOnInterpolant) {
    // Interpolating psi^ f reproduces psi^ of the interpolant exactly.
    Stream rng(16, 0);
    std::vector<double> v(65);
    for (auto& x : v) x = rng.uniform_open();
    const GridFunction f(v);
    const auto tf = apply_transfer(f);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform_open();
        EXPECT_NEAR(tf.at(x), 0.5 * (f.at(x / 2.0) + f.at((x + 1.0) / 2.0)), 1e-14);
    }
}

TEST(AdjointResidual, Examples) {
    EXPECT_LT(adjoint_residual(grid(one), grid(one)), 1e-12);
    EXPECT_LT(adjoint_residual(grid(ident), grid(ident)), 1e-8);
    EXPECT_LT(adjoint_residual(grid(cos2pi), grid(sin2pi)), 1e-8);
}

TEST(AdjointResidual, BothSidesMatchClosedForm) {
    // integral x (2x mod 1) dx = 7/24 = integral (x/2 + 1/4) x dx.
    const auto f = grid(ident);
    std::vector<double> prod(kRes + 1);
    const auto tf = apply_transfer(f);
    for (std::size_t i = 0; i <= kRes; ++i) prod[i] = tf[i] * f[i];
    EXPECT_NEAR(simpson(prod, f.spacing()), 7.0 / 24.0, 1e-14);
}

TEST(AdjointResidual, Errors) {
    EXPECT_THROW(adjoint_residual(grid(one, 8), grid(one, 16)), DomainError);
    EXPECT_THROW(adjoint_residual(grid(one, 6), grid(one, 6)), DomainError);
}

TEST(L1Contraction, Examples) {
    const auto c1 = l1_contraction_check(grid(one));
    EXPECT_NEAR(c1.lhs, 1.0, 1e-15);
    EXPECT_NEAR(c1.rhs, 1.0, 1e-15);
    EXPECT_TRUE(c1.pass);

    const auto cs = l1_contraction_check(grid(step));
    EXPECT_LE(cs.lhs, 0.5 + 1e-9);
    EXPECT_NEAR(cs.rhs, 0.5, 1e-15);
    EXPECT_TRUE(cs.pass);

    const auto cg = l1_contraction_check(grid(sign_half));
    EXPECT_LE(cg.lhs, 1.0 + 1e-9);
    EXPECT_TRUE(cg.pass);
}

TEST(L1Contraction, RandomFunctions) {
    Stream rng(17, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(257);
        for (auto& x : v) x = 2.0 * rng.uniform_open() - 1.0;
        EXPECT_TRUE(l1_contraction_check(GridFunction(v)).pass);
    }
}

TEST(L1Norm, ExactForPiecewiseLinear) {
    // |x - 1/2| sampled on 4 intervals: the interpolant is exact, norm 1/4.
    EXPECT_NEAR(l1_norm(GridFunction::sample([](double x) { return std::abs(x - 0.5); }, 4)), 0.25, 1e-16);
    // Sign change inside an interval: values 1 and -1 give two triangles of area 1/4 each.
    EXPECT_NEAR(l1_norm(GridFunction(std::vector<double>{1.0, -1.0, -1.0})), 0.25 + 0.5, 1e-16);
}

TEST(SeminormContraction, Constant) {
    const auto c = seminorm_contraction_check([](double) { return 1.0; }, 0.25, 0.3, single_thread());
    EXPECT_TRUE(c.pass);
    for (std::size_t i = 0; i < c.lhs.size(); ++i) {
        EXPECT_LT(c.lhs[i], 0.01);
        EXPECT_NEAR(c.lhs[i] / c.rhs[i], std::pow(2.0, 0.3 - 0.25), 1e-9);
    }
}

TEST(SeminormContraction, TruncatedWildOscillation) {
    auto f = [](double x) { return (x < 0.01 || x > 0.99 || x == 0.5) ? 0.0 : std::sin(1.0 / (x - 0.5)); };
    const auto c = seminorm_contraction_check(f, 0.25, 0.3, single_thread());
    EXPECT_TRUE(c.pass);
    EXPECT_FALSE(c.original.infinite);
    EXPECT_NEAR(c.factor, std::pow(2.0, -0.05), 1e-15);
}

TEST(SeminormContraction, ZetaPullback) {
    const auto spec = ObservableSpec::zeta(ObservableKind::ZetaRe, 0.5);
    const auto c = seminorm_contraction_check(as_pullback(spec), 0.25, 0.3, single_thread());
    EXPECT_TRUE(c.pass);
}

TEST(Ulam, SmallestMatrix) {
    const auto p = ulam_matrix(1);
    EXPECT_EQ(p.dense(), (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
}

TEST(Ulam, EntriesMatchBinMeasures) {
    // lambda(B_i intersect psi^-1 B_j) / lambda(B_i) by counting fine sub-bins.
    const int m = 4;
    const auto p = ulam_matrix(m);
    const std::size_t n = p.size();
    const std::size_t fine = 1024;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(n, 0.0);
        for (std::size_t k = 0; k < fine; ++k) {
            const double x = (static_cast<double>(i) + (k + 0.5) / fine) / static_cast<double>(n);
            row[static_cast<std::size_t>(psi(x) * static_cast<double>(n))] += 1.0 / fine;
        }
        for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(p.entry(i, j), row[j]) << i << " " << j;
    }
}

TEST(Ulam, RowsSumToOneExactly) {
    for (int m = 1; m <= 14; ++m) {
        const auto p = ulam_matrix(m);
        for (std::size_t i = 0; i < p.size(); ++i) ASSERT_EQ(p.row_sum(i), 1.0);
    }
}

TEST(Ulam, PowerIsUniform) {
    for (int m = 1; m <= 10; ++m) {
        const auto p = ulam_matrix(m);
        const double want = std::ldexp(1.0, -m);
        for (double v : p.dense_power(m)) ASSERT_EQ(v, want) << m;
    }
    for (int m = 11; m <= 12; ++m) {
        const auto p = ulam_matrix(m);
        const double want = std::ldexp(1.0, -m);
        for (std::size_t i = 0; i < p.size(); ++i) {
            std::vector<double> row(p.size(), 0.0);
            row[i] = 1.0;
            for (int k = 0; k < m; ++k) row = p.apply_left(row);
            for (double v : row) ASSERT_EQ(v, want) << m << " row " << i;
        }
    }
}

TEST(Ulam, ApplyMatchesDense) {
    const auto p = ulam_matrix(5);
    const auto d = p.dense();
    Stream rng(18, 0);
    std::vector<double> v(p.size());
    for (auto& x : v) x = rng.uniform_open();
    const auto right = p.apply(v), left = p.apply_left(v);
    for (std::size_t i = 0; i < p.size(); ++i) {
        double r = 0.0, l = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            r += d[i * p.size() + j] * v[j];
            l += v[j] * d[j * p.size() + i];
        }
        EXPECT_NEAR(right[i], r, 1e-15);
        EXPECT_NEAR(left[i], l, 1e-15);
    }
}

TEST(Ulam, Errors) {
    EXPECT_THROW(ulam_matrix(0), DomainError);
    EXPECT_THROW(ulam_matrix(15), DomainError);
    EXPECT_THROW(ulam_matrix(11).dense(), DomainError);
}

TEST(Spectrum, LevelEight) {
    const auto r = spectrum(ulam_matrix(8));
    ASSERT_EQ(r.moduli.size(), 2u);
    EXPECT_NEAR(r.moduli[0], 1.0, 1e-12);
    EXPECT_LT(r.moduli[1], 1e-10);
    EXPECT_GE(r.moduli[0], r.moduli[1]);
    EXPECT_NEAR(r.gap, 1.0, 1e-10);
    for (double v : r.leading_vector) EXPECT_NEAR(v, 1.0, 1e-10);
}

TEST(Spectrum, NilpotentPartVanishesAfterMSteps) {
    for (int m = 1; m <= 14; ++m) {
        const auto r = spectrum(ulam_matrix(m));
        EXPECT_LE(r.moduli[0], 1.0 + 1e-10);
        ASSERT_TRUE(r.nilpotency_index.has_value()) << m;
        EXPECT_EQ(*r.nilpotency_index, static_cast<std::size_t>(m));
        EXPECT_EQ(r.moduli[1], 0.0);
    }
}

TEST(CorrelationDecay, CosineUncorrelated) {
    const auto r = correlation_decay(ObservableSpec::parse("cos"), 8, 20000, 3, 1);
    EXPECT_NEAR(r.covariance[0], 0.5, 0.02);
    for (std::size_t k = 1; k < r.covariance.size(); ++k)
        EXPECT_LE(std::abs(r.covariance[k]), 3.0 * r.standard_error[k]) << k;
}

TEST(CorrelationDecay, PositionGeometric) {
    const auto r = correlation_decay(ObservableSpec::parse("position"), 10, 200000, 5, 1);
    for (std::size_t k = 0; k < r.covariance.size(); ++k)
        EXPECT_LE(std::abs(r.covariance[k] - std::ldexp(1.0, -static_cast<int>(k)) / 12.0), 3.0 * r.standard_error[k])
            << k;
    ASSERT_TRUE(r.fit_available);
    EXPECT_NEAR(r.theta, 0.5, 0.05);
}

TEST(CorrelationDecay, ConstantHasNoFit) {
    const auto r = correlation_decay(ObservableSpec::constant(3.0), 5, 1000, 1, 1);
    for (double c : r.covariance) EXPECT_EQ(c, 0.0);
    EXPECT_FALSE(r.fit_available);
    EXPECT_EQ(r.usable_lags, 0u);
}

TEST(CorrelationDecay, Errors) {
    EXPECT_THROW(correlation_decay(ObservableSpec::parse("cos"), 1, 100, 1), DomainError);
    EXPECT_THROW(correlation_decay(ObservableSpec::parse("cos"), 3, 1, 1), DomainError);
}

TEST(CorrelationDecay, IndependentOfThreadCount) {
    const auto spec = ObservableSpec::parse("position");
    const auto a = correlation_decay(spec, 6, 5000, 9, 1);
    const auto b = correlation_decay(spec, 6, 5000, 9, 3);
    EXPECT_EQ(a.covariance, b.covariance);
    EXPECT_EQ(a.standard_error, b.standard_error);
}
