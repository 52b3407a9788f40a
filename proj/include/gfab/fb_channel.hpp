#pragma once

// Finite-blocklength channel mathematics for grant-free short-packet access.
//
// Everything here is a pure function of its arguments. Powers are in watts,
// blocklengths in channel symbols, packet sizes in bits.

#include <optional>

namespace gfab {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Received-power threshold and noise for path-loss inversion power control.
/// Under Rayleigh fading the received SNR is exponential with mean snr_avg().
struct ChannelParams {
    double p0_watts = 0.0;
    double noise_watts = 0.0;

    static ChannelParams from_dbm(double p0_dbm, double noise_dbm);
    /// Builds parameters with noise fixed at 1 W so that snr_avg() == snr exactly.
    static ChannelParams from_snr(double snr);

    double snr_avg() const { return p0_watts / noise_watts; }
    void validate() const;
};

/// Breakpoints of the linear packet-error approximation in the SNR domain:
/// the error is 1 below gamma1, 0 above gamma2 and 1/2 - mu (x - beta) between.
struct FbErrorParams {
    double mu = 0.0;
    double beta = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    /// mu * beta, evaluated without forming beta when 2^(B/n) overflows.
    double mu_beta = 0.0;
};

/// Gaussian tail Q(x) = P[N(0,1) > x].
double gaussian_q(double x);

/// Inverse of gaussian_q. Throws std::domain_error unless 0 < p < 1.
double inverse_q(double p);

/// Normal-approximation rate in bits/symbol at blocklength n, SNR gamma and
/// target error eps. May be negative for very short blocks.
double achievable_rate(double n, double gamma, double eps);

FbErrorParams error_linearization(double n, double bits);

/// Piecewise-linear error probability at one SNR realisation.
double linearized_error_at(const FbErrorParams& lin, double snr);

/// Normal-approximation error probability at one SNR realisation (no linearisation).
double exact_error_at(double n, double bits, double snr);

/// Mean of the linearized error over the exponential SNR law of `ch`.
double packet_error_prob(double n, double bits, const ChannelParams& ch);

/// Probability that no other contender picks the same preamble: (1 - 1/M)^(K-1).
double collision_avoidance_prob(int k_users, int m_pre);

double success_prob(double n, double bits, const ChannelParams& ch, int k_users, int m_pre);

/// Transmit power that makes the mean received power equal p0:
/// P_k = P0 * d^alpha / rho0 (the received power is P_k * rho0 * d^-alpha).
double transmit_power(const ChannelParams& ch, double distance_m, double alpha, double rho0);

}  // namespace gfab
