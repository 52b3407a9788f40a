#include "gfab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gfab/delay_model.hpp"
#include "gfab/fb_channel.hpp"
#include "gfab/parallel.hpp"
#include "gfab/traffic.hpp"

namespace gfab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// One independent stream per (user, replication). mt19937_64 output is fully
// specified by the standard; the conversions below avoid the
// implementation-defined std distributions so results are portable.
class Stream {
public:
    Stream(std::uint64_t seed, int user, int replication)
        : rng_(splitmix64(splitmix64(seed) ^ splitmix64((static_cast<std::uint64_t>(replication) << 32) |
                                                        static_cast<std::uint32_t>(user)))) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    int below(int bound) {
        const std::uint64_t b = static_cast<std::uint64_t>(bound);
        const std::uint64_t threshold = (0 - b) % b;
        for (;;) {
            const std::uint64_t x = rng_();
            if (x >= threshold) return static_cast<int>(x % b);
        }
    }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        int k = 0;
        while (u > cdf && k < 1000000) {
            ++k;
            p *= mean / k;
            cdf += p;
            if (p == 0.0 && cdf < u) break;
        }
        return k;
    }

private:
    std::mt19937_64 rng_;
};

struct Packet {
    double arrival = 0.0;
    double first_attempt = -1.0;
    int attempts = 0;
};

struct Replica {
    std::vector<UserSimStats> users;
    std::vector<double> queuing_ms;
    std::vector<double> transmission_ms;
    std::vector<double> access_ms;
};

Replica run_replication(const SimConfig& sc, int replication) {
    const SystemConfig& sys = sc.system;
    const int users = sys.k_users;
    const int blocks = sys.blocks();
    const double load = sys.lambda_rate * sys.t_max_s;
    const double snr = sys.channel().snr_avg();
    const double d_p = sys.d_p_s();
    const double one_minus_inv_m = 1.0 - 1.0 / sys.m_pre;

    std::vector<FbErrorParams> lin(static_cast<size_t>(users) * blocks);
    for (int k = 0; k < users; ++k) {
        for (int q = 0; q < blocks; ++q) lin[k * blocks + q] = error_linearization(sc.n(k, q), sys.b_bits);
    }

    Replica rep;
    rep.users.resize(users);
    for (auto& u : rep.users) {
        u.cells.assign(blocks, CellStats{});
        u.queue_hist.assign(blocks, 0);
    }
    std::vector<Stream> streams;
    streams.reserve(users);
    for (int k = 0; k < users; ++k) streams.emplace_back(sc.seed, k, replication);

    std::vector<std::deque<Packet>> queues(users);
    for (int k = 0; k < users; ++k) {
        queues[k].resize(sc.initial_queue);
        rep.users[k].generated = sc.initial_queue;
    }
    std::vector<double> clock(users, 0.0);
    std::vector<int> preamble(users, -1);
    std::vector<int> occupancy(sys.m_pre, 0);
    std::vector<bool> attempting(users, false);

    for (long slot = 0; slot < sc.horizon; ++slot) {
        std::fill(occupancy.begin(), occupancy.end(), 0);
        int contenders = 0;
        for (int k = 0; k < users; ++k) {
            attempting[k] = !queues[k].empty();
            const bool draws = attempting[k] || sc.contention == ContentionModel::AllUsers;
            preamble[k] = draws ? streams[k].below(sys.m_pre) : -1;
            if (draws) {
                ++occupancy[preamble[k]];
                ++contenders;
            }
        }
        const double active_prediction = std::pow(one_minus_inv_m, contenders - 1);

        for (int k = 0; k < users; ++k) {
            UserSimStats& us = rep.users[k];
            auto& queue = queues[k];
            Stream& rng = streams[k];
            if (!attempting[k]) {
                const int batch = rng.poisson(load);
                us.generated += batch;
                if (batch > sys.q_th) {
                    us.dropped_overflow += batch;
                } else {
                    for (int i = 0; i < batch; ++i) queue.push_back(Packet{clock[k]});
                }
            } else {
                const int q = static_cast<int>(queue.size());
                CellStats& cell = us.cells[q];
                const double snr_draw = rng.exponential(snr);
                const double u = rng.uniform();
                const double eps = sc.error_model == ErrorDrawModel::Linearized
                                       ? linearized_error_at(lin[k * blocks + q], snr_draw)
                                       : exact_error_at(sc.n(k, q), sys.b_bits, snr_draw);
                const bool success = occupancy[preamble[k]] == 1 && u >= eps;

                ++cell.attempts;
                cell.predicted_active += active_prediction;
                Packet& head = queue.front();
                if (head.first_attempt < 0.0) head.first_attempt = clock[k];
                ++head.attempts;
                clock[k] += sc.n(k, q) / sys.w_hz + d_p;

                if (success) {
                    ++cell.successes;
                    ++cell.packets;
                    cell.packet_attempts += head.attempts;
                    cell.packet_attempts_sq += static_cast<double>(head.attempts) * head.attempts;
                    ++us.succeeded;
                    rep.queuing_ms.push_back(1e3 * (head.first_attempt - head.arrival));
                    rep.transmission_ms.push_back(1e3 * (clock[k] - head.first_attempt));
                    rep.access_ms.push_back(1e3 * (clock[k] - head.arrival));
                    queue.pop_front();
                } else if (head.attempts >= sc.cr_max_retx) {
                    ++us.dropped_cr;
                    queue.pop_front();
                }
            }
            ++us.queue_hist[queue.size()];
        }
    }
    for (int k = 0; k < users; ++k) rep.users[k].queued_at_end = static_cast<long>(queues[k].size());
    return rep;
}

DelaySummary summarize(std::vector<double> samples) {
    DelaySummary s;
    s.count = static_cast<long>(samples.size());
    if (samples.empty()) return s;
    double sum = 0.0;
    for (double v : samples) sum += v;
    s.mean_ms = sum / s.count;
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : samples) ss += (v - s.mean_ms) * (v - s.mean_ms);
        s.ci95_ms = 1.96 * std::sqrt(ss / (s.count - 1) / s.count);
    }
    std::sort(samples.begin(), samples.end());
    auto rank = [&](double p) {
        const size_t idx = static_cast<size_t>(std::ceil(p * s.count)) - 1;
        return samples[std::min(idx, samples.size() - 1)];
    };
    s.p50_ms = rank(0.50);
    s.p95_ms = rank(0.95);
    s.p99_ms = rank(0.99);
    return s;
}

void add(CellStats& a, const CellStats& b) {
    a.attempts += b.attempts;
    a.successes += b.successes;
    a.packets += b.packets;
    a.packet_attempts += b.packet_attempts;
    a.packet_attempts_sq += b.packet_attempts_sq;
    a.predicted_active += b.predicted_active;
}

ReportRow make_row(std::string quantity, int user, int block, double analytic, double empirical, double se,
                   bool checked) {
    ReportRow r{std::move(quantity), user, block, analytic, empirical, se, 0.0, checked, false};
    const double diff = empirical - analytic;
    if (se > 0.0) {
        r.z_score = diff / se;
    } else {
        r.z_score = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    r.flagged = checked && std::abs(r.z_score) > 3.0;
    return r;
}

}  // namespace

SimConfig SimConfig::from_system(const SystemConfig& cfg, const BlocklengthMatrix& n) {
    SimConfig sc;
    sc.system = cfg;
    sc.n = n.rounded();
    sc.horizon = cfg.simulator.slots;
    sc.replications = cfg.simulator.replications;
    sc.seed = cfg.experiment.seed;
    sc.cr_max_retx = cfg.simulator.cr_max_retx;
    sc.contention = cfg.simulator.contention;
    sc.error_model = cfg.simulator.error_model;
    return sc;
}

void SimConfig::validate() const {
    system.validate();
    if (n.users() != system.k_users || n.blocks() != system.blocks()) {
        throw std::invalid_argument("SimConfig: blocklength matrix has the wrong shape");
    }
    for (double v : n.values()) {
        if (!(v >= 1.0) || v != std::round(v)) {
            throw std::invalid_argument("SimConfig: blocklengths must be positive integers");
        }
    }
    if (horizon < 1) throw std::invalid_argument("SimConfig: horizon must be >= 1");
    if (replications < 1) throw std::invalid_argument("SimConfig: replications must be >= 1");
    if (cr_max_retx < 1) throw std::invalid_argument("SimConfig: cr_max_retx must be >= 1");
    if (initial_queue < 0 || initial_queue > system.q_th) {
        throw std::invalid_argument("SimConfig: initial_queue must be in 0..Q_th");
    }
}

double SimStats::success_rate(int k, int q) const {
    const auto& c = users[k].cells[q];
    return c.attempts ? static_cast<double>(c.successes) / c.attempts : 0.0;
}

double SimStats::success_ci95(int k, int q) const {
    const auto& c = users[k].cells[q];
    if (!c.attempts) return 0.0;
    const double p = success_rate(k, q);
    return 1.96 * std::sqrt(p * (1.0 - p) / c.attempts);
}

double SimStats::mean_attempts(int k, int q) const {
    const auto& c = users[k].cells[q];
    return c.packets ? static_cast<double>(c.packet_attempts) / c.packets : 0.0;
}

std::vector<double> SimStats::queue_distribution(int k) const {
    const auto& hist = users[k].queue_hist;
    long total = 0;
    for (long h : hist) total += h;
    std::vector<double> d(hist.size(), 0.0);
    for (size_t i = 0; i < hist.size(); ++i) d[i] = total ? static_cast<double>(hist[i]) / total : 0.0;
    return d;
}

long SimStats::total_generated() const {
    long t = 0;
    for (const auto& u : users) t += u.generated;
    return t;
}

long SimStats::total_dropped() const {
    long t = 0;
    for (const auto& u : users) t += u.dropped_overflow + u.dropped_cr;
    return t;
}

SimStats simulate(const SimConfig& sc) {
    sc.validate();
    std::vector<Replica> reps(sc.replications);
    parallel_for(reps.size(), sc.threads, [&](size_t r) { reps[r] = run_replication(sc, static_cast<int>(r)); });

    SimStats out;
    out.slots = sc.horizon * sc.replications;
    out.users = std::move(reps[0].users);
    std::vector<double> queuing = std::move(reps[0].queuing_ms);
    std::vector<double> transmission = std::move(reps[0].transmission_ms);
    std::vector<double> access = std::move(reps[0].access_ms);
    for (size_t r = 1; r < reps.size(); ++r) {
        for (size_t k = 0; k < out.users.size(); ++k) {
            UserSimStats& dst = out.users[k];
            const UserSimStats& src = reps[r].users[k];
            for (size_t q = 0; q < dst.cells.size(); ++q) {
                add(dst.cells[q], src.cells[q]);
                dst.queue_hist[q] += src.queue_hist[q];
            }
            dst.generated += src.generated;
            dst.succeeded += src.succeeded;
            dst.dropped_overflow += src.dropped_overflow;
            dst.dropped_cr += src.dropped_cr;
            dst.queued_at_end += src.queued_at_end;
        }
        queuing.insert(queuing.end(), reps[r].queuing_ms.begin(), reps[r].queuing_ms.end());
        transmission.insert(transmission.end(), reps[r].transmission_ms.begin(), reps[r].transmission_ms.end());
        access.insert(access.end(), reps[r].access_ms.begin(), reps[r].access_ms.end());
    }
    out.queuing = summarize(std::move(queuing));
    out.transmission = summarize(std::move(transmission));
    out.access = summarize(std::move(access));
    return out;
}

double analytic_access_delay_ms(const SystemConfig& cfg, const BlocklengthMatrix& n) {
    const ChannelParams ch = cfg.channel();
    const int q_th = cfg.q_th;
    const double m = cfg.lambda_rate * cfg.t_max_s;
    std::vector<double> gen(q_th + 1);
    double term = std::exp(-m);
    for (int a = 0; a <= q_th; ++a) {
        if (a > 0) term *= m / a;
        gen[a] = term;
    }
    double total = 0.0;
    for (int k = 0; k < n.users(); ++k) {
        std::vector<double> p(q_th + 1), t(q_th + 1);
        for (int q = 0; q <= q_th; ++q) {
            p[q] = success_prob(n(k, q), cfg.b_bits, ch, cfg.k_users, cfg.m_pre);
            t[q] = n(k, q) / cfg.w_hz;
        }
        // Product form: pi_0 = prod p_i / (prod p_i + sum_j prod_{r != j} p_r * tail_j).
        double prod_all = 1.0;
        for (int i = 1; i <= q_th; ++i) prod_all *= p[i];
        double denom = prod_all;
        std::vector<double> tail(q_th + 1, 0.0);
        for (int j = 1; j <= q_th; ++j) {
            for (int l = j; l <= q_th; ++l) tail[j] += gen[l];
            double prod_others = 1.0;
            for (int r = 1; r <= q_th; ++r) {
                if (r != j) prod_others *= p[r];
            }
            denom += prod_others * tail[j];
        }
        const double pi0 = prod_all / denom;
        double queuing = 0.0;
        for (int q = 1; q <= q_th; ++q) {
            const double pi_q = pi0 * tail[q] / p[q];
            double wait = 0.0;
            for (int l = 0; l <= q - 1; ++l) wait += (t[l] + cfg.d_p_s()) * (1.0 / p[l]);
            queuing += pi_q * wait;
        }
        double transmission = 0.0;
        for (int q = 0; q <= q_th; ++q) transmission += (t[q] + cfg.d_p_s()) * (1.0 / p[q]);
        total += queuing + transmission;
    }
    return 1e3 * total / n.users();
}

ValidationReport empirical_vs_analytic_report(const SimStats& ss, const SystemConfig& cfg,
                                              const BlocklengthMatrix& n) {
    const DelayModel model(cfg);
    ValidationReport rep;
    double pooled_packets = 0.0;
    double pooled_attempts = 0.0;
    double pooled_expected = 0.0;

    for (int k = 0; k < ss.user_count(); ++k) {
        const auto p_row = model.success_row(n.row(k));
        for (int q = 1; q < ss.blocks(); ++q) {
            const CellStats& c = ss.users[k].cells[q];
            const double p = p_row[q];
            if (c.attempts > 0) {
                const double se = std::sqrt(p * (1.0 - p) / c.attempts);
                rep.rows.push_back(make_row("success_prob", k, q, p, ss.success_rate(k, q), se, true));
                const double collision_free = collision_avoidance_prob(cfg.k_users, cfg.m_pre);
                const double active = collision_free > 0.0 ? p / collision_free * c.predicted_active / c.attempts
                                                           : 0.0;
                rep.rows.push_back(make_row("success_prob_realized_contenders", k, q, active,
                                            ss.success_rate(k, q), se, false));
            }
            if (c.packets > 0 && p > 0.0) {
                const double mean = 1.0 / p;
                const double se = std::sqrt((1.0 - p) / (p * p) / c.packets);
                rep.rows.push_back(make_row("mean_attempts", k, q, mean, ss.mean_attempts(k, q), se, true));
                pooled_packets += c.packets;
                pooled_attempts += c.packet_attempts;
                pooled_expected += c.packets * mean;
            }
        }

        const auto emp = ss.queue_distribution(k);
        const auto analytic = steady_state_from_tails(std::span(p_row).subspan(1), model.tails()).pi;
        const long slots = ss.slots;
        double tv = 0.0;
        for (size_t q = 0; q < emp.size(); ++q) {
            tv += std::abs(emp[q] - analytic[q]);
            const double se = std::sqrt(analytic[q] * (1.0 - analytic[q]) / std::max(1L, slots));
            rep.rows.push_back(make_row("queue_prob", k, static_cast<int>(q), analytic[q], emp[q], se, false));
        }
        tv *= 0.5;
        rep.max_queue_tv = std::max(rep.max_queue_tv, tv);
        ReportRow tv_row = make_row("queue_tv", k, -1, 0.0, tv, 0.0, false);
        tv_row.z_score = 0.0;
        tv_row.checked = true;
        tv_row.flagged = tv > 0.05;
        rep.rows.push_back(tv_row);
    }

    if (pooled_packets > 0) {
        const double empirical = pooled_attempts / pooled_packets;
        const double expected = pooled_expected / pooled_packets;
        rep.pooled_attempts_rel_error = std::abs(empirical - expected) / expected;
        ReportRow row = make_row("pooled_mean_attempts", -1, -1, expected, empirical, 0.0, false);
        row.z_score = 0.0;
        row.checked = true;
        row.flagged = rep.pooled_attempts_rel_error > 0.02;
        rep.rows.push_back(row);
    }

    const DelayBreakdown bd = model.evaluate(n);
    auto delay_row = [&](const char* name, double analytic, const DelaySummary& s) {
        if (s.count > 0) rep.rows.push_back(make_row(name, -1, -1, analytic, s.mean_ms, s.ci95_ms / 1.96, false));
    };
    delay_row("queuing_delay_ms", bd.average_queuing_ms, ss.queuing);
    delay_row("transmission_delay_ms", bd.average_transmission_ms, ss.transmission);
    delay_row("access_delay_ms", bd.average_access_ms, ss.access);

    for (const auto& r : rep.rows) rep.flagged += r.flagged ? 1 : 0;
    return rep;
}

std::string report_csv(const ValidationReport& report) {
    std::ostringstream out;
    out << "quantity,user,block,analytic,empirical,std_error,z_score,checked,flagged\n";
    char buf[256];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6g,%.6g,%.6g,%.4g,%d,%d\n", r.quantity.c_str(), r.user, r.block,
                      r.analytic, r.empirical, r.std_error, r.z_score, r.checked ? 1 : 0, r.flagged ? 1 : 0);
        out << buf;
    }
    return out.str();
}

std::string sim_cells_csv(const SimStats& ss, const BlocklengthMatrix& n) {
    std::ostringstream out;
    out << "user,block,n_symbols,attempts,successes,success_rate,success_ci95,packets,mean_attempts\n";
    char buf[256];
    for (int k = 0; k < ss.user_count(); ++k) {
        for (int q = 0; q < ss.blocks(); ++q) {
            const CellStats& c = ss.users[k].cells[q];
            std::snprintf(buf, sizeof(buf), "%d,%d,%.6g,%ld,%ld,%.6g,%.6g,%ld,%.6g\n", k, q, n(k, q), c.attempts,
                          c.successes, ss.success_rate(k, q), ss.success_ci95(k, q), c.packets,
                          ss.mean_attempts(k, q));
            out << buf;
        }
    }
    return out.str();
}

std::string sim_summary_text(const SimStats& ss) {
    std::ostringstream out;
    long succeeded = 0;
    long queued = 0;
    for (const auto& u : ss.users) {
        succeeded += u.succeeded;
        queued += u.queued_at_end;
    }
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "slots %ld\nusers %d\ngenerated %ld\nsucceeded %ld\ndropped %ld\nqueued_at_end %ld\n",
                  ss.slots, ss.user_count(), ss.total_generated(), succeeded, ss.total_dropped(), queued);
    out << buf;
    auto line = [&](const char* name, const DelaySummary& s) {
        std::snprintf(buf, sizeof(buf), "%s_ms mean %.6g ci95 %.6g p50 %.6g p95 %.6g p99 %.6g n %ld\n", name,
                      s.mean_ms, s.ci95_ms, s.p50_ms, s.p95_ms, s.p99_ms, s.count);
        out << buf;
    };
    line("queuing", ss.queuing);
    line("transmission", ss.transmission);
    line("access", ss.access);
    return out.str();
}

}  // namespace gfab
