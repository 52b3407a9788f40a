#include "gfab/delay_model.hpp"

#include <limits>
#include <stdexcept>

namespace gfab {

DelayModel::DelayModel(const SystemConfig& cfg)
    : channel_(cfg.channel()),
      traffic_(cfg.traffic()),
      tails_(poisson_tails(traffic_)),
      bits_(cfg.b_bits),
      w_hz_(cfg.w_hz),
      d_p_(cfg.d_p_s()),
      p_one_(collision_avoidance_prob(cfg.k_users, cfg.m_pre)) {}

double DelayModel::success(double n) const {
    return (1.0 - packet_error_prob(n, bits_, channel_)) * p_one_;
}

std::vector<double> DelayModel::success_row(std::span<const double> n_row) const {
    std::vector<double> p(n_row.size());
    for (size_t q = 0; q < n_row.size(); ++q) p[q] = success(n_row[q]);
    return p;
}

std::vector<double> DelayModel::tti_row(std::span<const double> n_row) const {
    std::vector<double> t(n_row.size());
    for (size_t q = 0; q < n_row.size(); ++q) t[q] = n_row[q] / w_hz_;
    return t;
}

double DelayModel::user_delay_s(std::span<const double> n_row) const {
    if (n_row.size() != static_cast<size_t>(blocks())) {
        throw std::invalid_argument("DelayModel: row must have Q_th+1 entries");
    }
    return access_delay_seconds(tti_row(n_row), success_row(n_row), tails_, d_p_);
}

double DelayModel::user_delay_or_inf(std::span<const double> n_row) const {
    const auto p = success_row(n_row);
    for (double v : p) {
        if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
    }
    return access_delay_seconds(tti_row(n_row), p, tails_, d_p_);
}

UserDelay DelayModel::user_breakdown(std::span<const double> n_row) const {
    return access_delay(tti_row(n_row), success_row(n_row), traffic_, d_p_);
}

DelayBreakdown DelayModel::evaluate(const BlocklengthMatrix& n) const {
    if (n.blocks() != blocks()) throw std::invalid_argument("DelayModel: matrix has wrong column count");
    DelayBreakdown out;
    out.users.reserve(n.users());
    for (int k = 0; k < n.users(); ++k) {
        const UserDelay d = user_breakdown(n.row(k));
        out.average_access_ms += d.access_ms;
        out.average_queuing_ms += d.queuing_ms;
        out.average_transmission_ms += d.transmission_ms;
        out.users.push_back(d);
    }
    const double inv_k = 1.0 / n.users();
    out.average_access_ms *= inv_k;
    out.average_queuing_ms *= inv_k;
    out.average_transmission_ms *= inv_k;
    return out;
}

DelayBreakdown average_access_delay(const BlocklengthMatrix& n, const SystemConfig& cfg) {
    if (n.users() != cfg.k_users) throw std::invalid_argument("average_access_delay: matrix has wrong row count");
    return DelayModel(cfg).evaluate(n);
}

}  // namespace gfab
