#include "gfab/fb_channel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gfab {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double gaussian_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// Acklam's rational approximation of the standard normal quantile, |rel err| < 1.2e-9.
double normal_quantile_seed(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    auto tail = [&](double q) {
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    };
    if (p < p_low) return tail(std::sqrt(-2.0 * std::log(p)));
    if (p > 1.0 - p_low) return -tail(std::sqrt(-2.0 * std::log1p(-p)));
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

ChannelParams ChannelParams::from_dbm(double p0_dbm, double noise_dbm) {
    ChannelParams ch{dbm_to_watts(p0_dbm), dbm_to_watts(noise_dbm)};
    ch.validate();
    return ch;
}

ChannelParams ChannelParams::from_snr(double snr) {
    ChannelParams ch{snr, 1.0};
    ch.validate();
    return ch;
}

void ChannelParams::validate() const {
    require(p0_watts > 0.0 && std::isfinite(p0_watts), "channel: p0 must be positive");
    require(noise_watts > 0.0 && std::isfinite(noise_watts), "channel: noise power must be positive");
}

double gaussian_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double inverse_q(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("inverse_q: probability must lie in (0,1), got " + std::to_string(p));
    }
    double x = -normal_quantile_seed(p);
    // Newton on Q(x) - p; Q'(x) = -pdf(x).
    for (int i = 0; i < 4; ++i) {
        const double pdf = gaussian_pdf(x);
        if (pdf <= 0.0) break;
        const double step = (gaussian_q(x) - p) / pdf;
        x += step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) break;
    }
    return x;
}

double achievable_rate(double n, double gamma, double eps) {
    require(n > 0.0, "achievable_rate: blocklength must be positive");
    require(gamma > 0.0, "achievable_rate: SNR must be positive");
    require(eps > 0.0 && eps < 1.0, "achievable_rate: eps must lie in (0,1)");
    const double log_1p_gamma = std::log1p(gamma);
    const double dispersion = -std::expm1(-2.0 * log_1p_gamma);
    return (log_1p_gamma - std::sqrt(dispersion / n) * inverse_q(eps)) / kLn2;
}

FbErrorParams error_linearization(double n, double bits) {
    require(n > 0.0, "error_linearization: blocklength must be positive");
    require(bits > 0.0, "error_linearization: packet size must be positive");

    const double t = bits / n * kLn2;     // ln 2^(B/n)
    const double d = std::expm1(2.0 * t);  // 2^(2B/n) - 1, may be +inf
    FbErrorParams lin;
    lin.mu_beta = std::sqrt(n) / (2.0 * kPi) * std::sqrt(std::tanh(0.5 * t));
    if (!std::isfinite(d)) {
        // beta and 1/(2 mu) both overflow; their difference has the sign of sqrt(n) - pi.
        lin.mu = 0.0;
        lin.beta = kInf;
        lin.gamma1 = std::sqrt(n) > kPi ? kInf : -kInf;
        lin.gamma2 = kInf;
        return lin;
    }
    lin.mu = std::sqrt(n / d) / (2.0 * kPi);
    lin.beta = std::expm1(t);
    const double half_width = kPi * std::sqrt(d / n);
    lin.gamma1 = lin.beta - half_width;
    lin.gamma2 = lin.beta + half_width;
    return lin;
}

double linearized_error_at(const FbErrorParams& lin, double snr) {
    if (snr <= lin.gamma1) return 1.0;
    if (snr > lin.gamma2) return 0.0;
    return std::clamp(0.5 + lin.mu_beta - lin.mu * snr, 0.0, 1.0);
}

double exact_error_at(double n, double bits, double snr) {
    if (snr <= 0.0) return 1.0;
    const double log_1p_gamma = std::log1p(snr);
    const double dispersion = -std::expm1(-2.0 * log_1p_gamma);
    const double margin = n * log_1p_gamma / kLn2 - bits;
    return gaussian_q(margin * kLn2 / std::sqrt(n * dispersion));
}

double packet_error_prob(double n, double bits, const ChannelParams& ch) {
    const FbErrorParams lin = error_linearization(n, bits);
    const double s = ch.snr_avg();
    double p = 0.0;
    if (lin.gamma1 >= 0.0) {
        if (!std::isfinite(lin.gamma1)) return 1.0;
        // 1 - mu s (e^{-g1/s} - e^{-g2/s}) with g2 - g1 = 1/mu.
        p = 1.0 + lin.mu * s * std::exp(-lin.gamma1 / s) * std::expm1(-1.0 / (lin.mu * s));
    } else {
        // Lower limit clamped to 0: integral of (1/2 - mu (x - beta)) f(x) over [0, gamma2].
        const double tail = lin.mu > 0.0 ? lin.mu * s * std::expm1(-lin.gamma2 / s) : 0.0;
        p = 0.5 + lin.mu_beta + tail;
    }
    assert(p > -1e-12 && p < 1.0 + 1e-12);
    return std::clamp(p, 0.0, 1.0);
}

double collision_avoidance_prob(int k_users, int m_pre) {
    require(k_users >= 1, "collision_avoidance_prob: need at least one user");
    require(m_pre >= 1, "collision_avoidance_prob: need at least one preamble");
    if (k_users == 1) return 1.0;
    if (m_pre == 1) return 0.0;
    return std::exp((k_users - 1) * std::log1p(-1.0 / m_pre));
}

double success_prob(double n, double bits, const ChannelParams& ch, int k_users, int m_pre) {
    return (1.0 - packet_error_prob(n, bits, ch)) * collision_avoidance_prob(k_users, m_pre);
}

double transmit_power(const ChannelParams& ch, double distance_m, double alpha, double rho0) {
    require(distance_m > 0.0, "transmit_power: distance must be positive");
    require(alpha >= 0.0 && std::isfinite(alpha), "transmit_power: path-loss exponent must be finite and >= 0");
    require(rho0 > 0.0, "transmit_power: reference gain must be positive");
    return ch.p0_watts * std::pow(distance_m, alpha) / rho0;
}

}  // namespace gfab
