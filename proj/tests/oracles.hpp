#pragma once

// Brute-force reference implementations used by the tests. None of them
// shares code with the library beyond the public entry point under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 8, 1e-13, &err);
}

/// Gaussian tail by quadrature of the density.
inline double gaussian_tail(double x) {
    const auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    if (x >= 0.0) return integrate(phi, x, x + 40.0);
    return 1.0 - integrate(phi, -x, -x + 40.0);
}

/// Bisection for Q(x) = p.
inline double inverse_tail(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gaussian_tail(mid) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Linear {
    double mu, beta, g1, g2;
};

/// Straight from the defining formulas, in plain floating point.
inline Linear linearize(double n, double b) {
    Linear l;
    l.mu = std::sqrt(n / (std::pow(2.0, 2.0 * b / n) - 1.0)) / (2.0 * std::numbers::pi);
    l.beta = std::pow(2.0, b / n) - 1.0;
    l.g1 = l.beta - 1.0 / (2.0 * l.mu);
    l.g2 = l.beta + 1.0 / (2.0 * l.mu);
    return l;
}

/// E[eps(gamma)] for exponential gamma with mean s, eps piecewise linear and
/// clipped to [0, 1] at the breakpoints. Integrates to 80 means (tail < e^-80).
inline double expected_error(double n, double b, double s) {
    const Linear l = linearize(n, b);
    const auto pdf = [s](double x) { return std::exp(-x / s) / s; };
    const double end = 80.0 * s;
    const double a = std::clamp(l.g1, 0.0, end);
    const double c = std::clamp(l.g2, 0.0, end);
    double total = integrate(pdf, 0.0, a);
    total += integrate([&](double x) { return (0.5 - l.mu * (x - l.beta)) * pdf(x); }, a, c);
    return total;
}

/// Probability that user 0 picks a preamble nobody else picked.
inline double collision_free_mc(int k, int m, long trials, std::uint64_t seed, double* std_error) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, m - 1);
    long hits = 0;
    for (long t = 0; t < trials; ++t) {
        const int mine = pick(rng);
        bool unique = true;
        for (int j = 1; j < k; ++j) unique &= pick(rng) != mine;
        hits += unique;
    }
    const double p = double(hits) / trials;
    if (std_error) *std_error = std::sqrt(std::max(p * (1.0 - p), 1e-300) / trials);
    return p;
}

/// 200-term product series for the Poisson pmf.
inline std::vector<double> poisson_series(double m) {
    std::vector<double> pmf(200);
    double term = std::exp(-m);
    for (int a = 0; a < 200; ++a) {
        if (a > 0) term *= m / a;
        pmf[a] = term;
    }
    return pmf;
}

/// Stationary vector of the queue chain by repeated squaring of its
/// transition matrix. From 0: jump to l in 1..Q_th w.p. pmf(l), else stay.
/// From q >= 1: drop to q-1 w.p. p_suc[q-1], else stay.
inline std::vector<double> chain_stationary(const std::vector<double>& p_suc, double m) {
    const int q_th = static_cast<int>(p_suc.size());
    const int s = q_th + 1;
    const auto pmf = poisson_series(m);
    std::vector<double> P(s * s, 0.0);
    double out = 0.0;
    for (int l = 1; l <= q_th; ++l) {
        P[l] = pmf[l];
        out += pmf[l];
    }
    P[0] = 1.0 - out;
    for (int q = 1; q <= q_th; ++q) {
        P[q * s + q - 1] = p_suc[q - 1];
        P[q * s + q] = 1.0 - p_suc[q - 1];
    }
    std::vector<double> R(s * s);
    for (int it = 0; it < 80; ++it) {
        std::fill(R.begin(), R.end(), 0.0);
        for (int i = 0; i < s; ++i)
            for (int k = 0; k < s; ++k)
                for (int j = 0; j < s; ++j) R[i * s + j] += P[i * s + k] * P[k * s + j];
        for (int i = 0; i < s; ++i) {
            double row = 0.0;
            for (int j = 0; j < s; ++j) row += R[i * s + j];
            for (int j = 0; j < s; ++j) R[i * s + j] /= row;
        }
        P.swap(R);
    }
    return std::vector<double>(P.begin(), P.begin() + s);
}

/// Product form of the stationary probability of the empty queue.
inline double pi0_product_form(const std::vector<double>& p_suc, double m) {
    const int q_th = static_cast<int>(p_suc.size());
    const auto pmf = poisson_series(m);
    double all = 1.0;
    for (double p : p_suc) all *= p;
    double denom = all;
    for (int j = 1; j <= q_th; ++j) {
        double tail = 0.0;
        for (int l = j; l <= q_th; ++l) tail += pmf[l];
        double others = 1.0;
        for (int r = 1; r <= q_th; ++r)
            if (r != j) others *= p_suc[r - 1];
        denom += others * tail;
    }
    return all / denom;
}

/// Minimum of f on [lo, hi]: log-grid scan, then golden section around the
/// best grid point.
inline double minimize_1d(const std::function<double(double)>& f, double lo, double hi, int grid = 2000) {
    const double r = std::log(hi / lo);
    int best = 0;
    double best_v = INFINITY;
    for (int i = 0; i <= grid; ++i) {
        const double v = f(lo * std::exp(r * i / grid));
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    double a = lo * std::exp(r * std::max(best - 1, 0) / grid);
    double b = lo * std::exp(r * std::min(best + 1, grid) / grid);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 200; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace oracle
