#include "gfab/traffic.hpp"

#include <cmath>
#include <string>

namespace gfab {

namespace {

void check_rows(std::span<const double> tti_row, std::span<const double> p_suc_row) {
    if (tti_row.size() != p_suc_row.size() || tti_row.empty()) {
        throw std::invalid_argument("delay: TTI and success rows must be non-empty and equal length");
    }
}

// (T_l + D_P) / p_l for every column.
std::vector<double> attempt_costs(std::span<const double> tti_row, std::span<const double> p_suc_row,
                                  double d_p) {
    std::vector<double> cost(tti_row.size());
    for (size_t l = 0; l < tti_row.size(); ++l) {
        cost[l] = (tti_row[l] + d_p) * expected_retransmissions(p_suc_row[l]);
    }
    return cost;
}

double queuing_from_costs(const std::vector<double>& cost, std::span<const double> pi) {
    double total = 0.0;
    double prefix = 0.0;  // sum_{l<q} cost[l]
    for (size_t q = 1; q < pi.size(); ++q) {
        prefix += cost[q - 1];
        total += pi[q] * prefix;
    }
    return total;
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

void TrafficParams::validate() const {
    if (!(lambda_rate >= 0.0) || !std::isfinite(lambda_rate)) {
        throw std::invalid_argument("traffic: arrival rate must be >= 0");
    }
    if (!(t_max > 0.0)) throw std::invalid_argument("traffic: T_max must be > 0");
    if (q_th < 0) throw std::invalid_argument("traffic: Q_th must be >= 0");
}

double poisson_pmf(const TrafficParams& tp, int a) {
    if (a < 0) throw std::invalid_argument("poisson_pmf: count must be >= 0");
    const double m = tp.load();
    if (m == 0.0) return a == 0 ? 1.0 : 0.0;
    return std::exp(-m + a * std::log(m) - std::lgamma(a + 1.0));
}

std::vector<double> poisson_tails(const TrafficParams& tp) {
    std::vector<double> tails(tp.q_th + 1, 0.0);
    double acc = 0.0;
    for (int l = tp.q_th; l >= 0; --l) {
        acc += poisson_pmf(tp, l);
        tails[l] = acc;
    }
    return tails;
}

double poisson_tail(const TrafficParams& tp, int q) {
    if (q < 0 || q > tp.q_th) throw std::invalid_argument("poisson_tail: q outside 0..Q_th");
    return poisson_tails(tp)[q];
}

double expected_arriving_bits(const TrafficParams& tp, double bits) {
    double mean = 0.0;
    for (int a = 1; a <= tp.q_th; ++a) mean += a * poisson_pmf(tp, a);
    return bits * mean;
}

SteadyState steady_state_from_tails(std::span<const double> p_suc, std::span<const double> tails) {
    if (tails.size() != p_suc.size() + 1) {
        throw std::invalid_argument("steady_state: need Q_th success probabilities and Q_th+1 tails");
    }
    const size_t q_th = p_suc.size();
    SteadyState ss;
    ss.pi.assign(q_th + 1, 0.0);
    double ratio_sum = 0.0;
    for (size_t j = 1; j <= q_th; ++j) {
        const double p = p_suc[j - 1];
        if (!(p > 0.0)) {
            throw DegenerateChainError("steady_state: success probability of state " + std::to_string(j) +
                                       " is zero");
        }
        if (p > 1.0) throw std::invalid_argument("steady_state: success probability above 1");
        ss.pi[j] = tails[j] / p;
        ratio_sum += ss.pi[j];
    }
    const double pi0 = 1.0 / (1.0 + ratio_sum);
    ss.pi[0] = pi0;
    for (size_t j = 1; j <= q_th; ++j) ss.pi[j] *= pi0;
    return ss;
}

SteadyState steady_state(std::span<const double> p_suc, const TrafficParams& tp) {
    if (p_suc.size() != static_cast<size_t>(tp.q_th)) {
        throw std::invalid_argument("steady_state: expected Q_th success probabilities");
    }
    const auto tails = poisson_tails(tp);
    return steady_state_from_tails(p_suc, tails);
}

double expected_retransmissions(double p_suc) {
    if (!(p_suc > 0.0)) throw DegenerateChainError("expected_retransmissions: success probability is zero");
    if (p_suc > 1.0) throw std::invalid_argument("expected_retransmissions: success probability above 1");
    return 1.0 / p_suc;
}

double queuing_delay(std::span<const double> tti_row, std::span<const double> p_suc_row,
                     const SteadyState& ss, double d_p) {
    check_rows(tti_row, p_suc_row);
    if (ss.pi.size() != tti_row.size()) throw std::invalid_argument("queuing_delay: pi has wrong length");
    return queuing_from_costs(attempt_costs(tti_row, p_suc_row, d_p), ss.pi);
}

double transmission_delay(std::span<const double> tti_row, std::span<const double> p_suc_row, double d_p) {
    check_rows(tti_row, p_suc_row);
    return sum(attempt_costs(tti_row, p_suc_row, d_p));
}

double access_delay_seconds(std::span<const double> tti_row, std::span<const double> p_suc_row,
                            std::span<const double> tails, double d_p) {
    check_rows(tti_row, p_suc_row);
    const SteadyState ss = steady_state_from_tails(p_suc_row.subspan(1), tails);
    const auto cost = attempt_costs(tti_row, p_suc_row, d_p);
    return queuing_from_costs(cost, ss.pi) + sum(cost);
}

UserDelay access_delay(std::span<const double> tti_row, std::span<const double> p_suc_row,
                       const TrafficParams& tp, double d_p) {
    check_rows(tti_row, p_suc_row);
    if (tti_row.size() != static_cast<size_t>(tp.q_th) + 1) {
        throw std::invalid_argument("access_delay: rows must have Q_th+1 entries");
    }
    const auto tails = poisson_tails(tp);
    const SteadyState ss = steady_state_from_tails(p_suc_row.subspan(1), tails);

    const auto cost = attempt_costs(tti_row, p_suc_row, d_p);
    std::vector<double> zero_tti(tti_row.size(), 0.0);
    const auto overhead_cost = attempt_costs(zero_tti, p_suc_row, d_p);

    UserDelay d;
    d.queuing_ms = 1e3 * queuing_from_costs(cost, ss.pi);
    d.transmission_ms = 1e3 * sum(cost);
    d.overhead_ms = 1e3 * (queuing_from_costs(overhead_cost, ss.pi) + sum(overhead_cost));
    d.access_ms = 1e3 * access_delay_seconds(tti_row, p_suc_row, tails, d_p);
    return d;
}

}  // namespace gfab
