#pragma once

#include <span>
#include <vector>

#include "gfab/blocklength.hpp"
#include "gfab/config.hpp"
#include "gfab/fb_channel.hpp"
#include "gfab/traffic.hpp"

namespace gfab {

/// Binds a SystemConfig to the analytic chain: blocklength -> success
/// probability -> stationary queue -> access delay.
class DelayModel {
public:
    explicit DelayModel(const SystemConfig& cfg);

    double success(double n) const;
    std::vector<double> success_row(std::span<const double> n_row) const;

    /// Access delay (s) of a user with blocklength row n_row. Throws
    /// DegenerateChainError when some success probability is zero.
    double user_delay_s(std::span<const double> n_row) const;
    /// As above but a zero success probability yields +infinity.
    double user_delay_or_inf(std::span<const double> n_row) const;

    UserDelay user_breakdown(std::span<const double> n_row) const;
    DelayBreakdown evaluate(const BlocklengthMatrix& n) const;

    const ChannelParams& channel() const { return channel_; }
    const TrafficParams& traffic() const { return traffic_; }
    const std::vector<double>& tails() const { return tails_; }
    double w_hz() const { return w_hz_; }
    double d_p_s() const { return d_p_; }
    int blocks() const { return traffic_.q_th + 1; }

private:
    std::vector<double> tti_row(std::span<const double> n_row) const;

    ChannelParams channel_;
    TrafficParams traffic_;
    std::vector<double> tails_;
    double bits_;
    double w_hz_;
    double d_p_;
    double p_one_;
};

/// Mean access delay over users; the optimizer objective.
DelayBreakdown average_access_delay(const BlocklengthMatrix& n, const SystemConfig& cfg);

}  // namespace gfab
