#pragma once

// Reference computations used only by the tests. None of them share code
// with the library.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

/**
 * zeta(s) through the alternating eta series with Borwein's acceleration
 * (n = 120 terms), valid on the whole half-plane Re s > 0 away from s = 1.
 */
inline cplx zeta_borwein(cplx s, int n = 120) {
    std::vector<double> d(n + 1);
    double term = 1.0 / n;  // i = 0
    double acc = term;
    d[0] = n * acc;
    for (int i = 0; i < n; ++i) {
        term *= 4.0 * (n + i) * (n - i) / ((2.0 * i + 1.0) * (2.0 * i + 2.0));
        acc += term;
        d[i + 1] = n * acc;
    }
    cplx sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double sign = k % 2 == 0 ? 1.0 : -1.0;
        sum += sign * (d[k] - d[n]) / d[n] * std::exp(-s * std::log(static_cast<double>(k + 1)));
    }
    return -sum / (1.0 - std::exp((1.0 - s) * std::log(2.0)));
}

/// zeta'(s) by a five-point difference of the Borwein oracle.
inline cplx zeta_prime_borwein(cplx s, double h = 1e-4) {
    return (-zeta_borwein(s + 2.0 * h) + 8.0 * zeta_borwein(s + h) - 8.0 * zeta_borwein(s - h) +
            zeta_borwein(s - 2.0 * h)) /
           (12.0 * h);
}

/// sum 1/n^2 by direct summation with an integral tail correction.
inline double zeta2_direct() {
    const int N = 1000000;
    double s = 0.0;
    for (int n = N; n >= 1; --n) s += 1.0 / (static_cast<double>(n) * n);
    // tail sum_{n > N} 1/n^2 = 1/N - 1/(2N^2) + 1/(6N^3) - ...
    const double x = N;
    return s + 1.0 / x - 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x * x * x);
}

/// -sum log n / n^2 by direct summation with an integral tail correction.
inline double zeta_prime2_direct() {
    const int N = 1000000;
    double s = 0.0;
    for (int n = N; n >= 2; --n) s += std::log(static_cast<double>(n)) / (static_cast<double>(n) * n);
    // tail: integral_N^inf log x / x^2 dx - log N / (2 N^2) + ...
    const double x = N;
    const double lx = std::log(x);
    s += (lx + 1.0) / x - lx / (2.0 * x * x) + (2.0 * lx - 1.0) / (12.0 * x * x * x);
    return -s;
}

/// E_mu Re zeta(s + i t) by residues: zeta(1 + s) - 2 / (s (2 - s)).
inline double mean_re_zeta(double s) { return std::real(zeta_borwein(cplx(1.0 + s, 0.0))) - 2.0 / (s * (2.0 - s)); }

/// E_mu |t|^w = 1 / cos(pi w / 2) for 0 <= w < 1.
inline double mean_power(double w) { return 1.0 / std::cos(std::numbers::pi * w / 2.0); }

}  // namespace oracle
