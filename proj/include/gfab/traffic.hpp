#pragma once

// Poisson traffic, the per-user queue-length Markov chain and the delay
// expressions built on its stationary distribution.
//
// Row vectors (TTIs, success probabilities) are indexed by packet index
// q = 0..Q_th. State q >= 1 of the chain is served with the success
// probability of column q; column 0 only enters the delay sums.

#include <span>
#include <stdexcept>
#include <vector>

namespace gfab {

struct TrafficParams {
    double lambda_rate = 0.0;  // packets / s
    double t_max = 1.0;        // arrival observation window, s
    int q_th = 1;              // maximum queue length

    double load() const { return lambda_rate * t_max; }
    void validate() const;
};

/// Raised when a success probability of zero makes a state absorbing.
class DegenerateChainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

double poisson_pmf(const TrafficParams& tp, int a);

/// sum_{l=q}^{Q_th} pmf(l); the mass above Q_th is dropped.
double poisson_tail(const TrafficParams& tp, int q);

/// poisson_tail for q = 0..Q_th in one pass.
std::vector<double> poisson_tails(const TrafficParams& tp);

/// Expected bits arriving per window, B * sum_{a=0}^{Q_th} a pmf(a).
double expected_arriving_bits(const TrafficParams& tp, double bits);

struct SteadyState {
    std::vector<double> pi;  // pi[q], q = 0..Q_th
};

/// Stationary queue-length distribution. p_suc holds the success
/// probabilities of states 1..Q_th (length Q_th).
SteadyState steady_state(std::span<const double> p_suc, const TrafficParams& tp);

/// Same, with the truncated tails tails[q], q = 0..Q_th, precomputed.
SteadyState steady_state_from_tails(std::span<const double> p_suc, std::span<const double> tails);

/// Mean of the geometric attempt count, 1 / p_suc.
double expected_retransmissions(double p_suc);

/// sum_{q=1}^{Q_th} pi_q sum_{l<q} (T_l + D_P) E[X_l], seconds.
double queuing_delay(std::span<const double> tti_row, std::span<const double> p_suc_row,
                     const SteadyState& ss, double d_p);

/// sum_{q=0}^{Q_th} (T_q + D_P) E[X_q], seconds. The q = 0 term is kept as written.
double transmission_delay(std::span<const double> tti_row, std::span<const double> p_suc_row, double d_p);

struct UserDelay {
    double queuing_ms = 0.0;
    double transmission_ms = 0.0;
    double overhead_ms = 0.0;  // share of queuing + transmission contributed by D_P
    double access_ms = 0.0;    // queuing + transmission
};

struct DelayBreakdown {
    std::vector<UserDelay> users;
    double average_access_ms = 0.0;
    double average_queuing_ms = 0.0;
    double average_transmission_ms = 0.0;
};

/// Access delay of one user from its TTI and success-probability rows.
UserDelay access_delay(std::span<const double> tti_row, std::span<const double> p_suc_row,
                       const TrafficParams& tp, double d_p);

/// Access delay in seconds with precomputed tails. Every delay evaluation in
/// the library, including the optimizer objective, goes through this kernel.
double access_delay_seconds(std::span<const double> tti_row, std::span<const double> p_suc_row,
                            std::span<const double> tails, double d_p);

}  // namespace gfab
