#pragma once

// Seeded Monte Carlo simulation of two-step grant-free access.
//
// Time advances in attempt slots. In every slot:
//   * an idle user (empty queue) draws a batch of Poisson(lambda * T_max)
//     new packets; a batch larger than Q_th is dropped whole, matching the
//     truncated arrival tail of the analytic chain;
//   * a backlogged user with queue length q sends its head-of-line packet
//     with blocklength n(k, q) and a preamble drawn uniformly from M_pre;
//   * the attempt succeeds when no other contender drew the same preamble
//     and the packet survives an error draw at a fresh exponential SNR.
// Each user keeps its own clock, advanced by T(k, q) + D_P per attempt, so
// heterogeneous TTIs are serialised per user and collisions are grouped by
// slot index.

#include <cstdint>
#include <string>
#include <vector>

#include "gfab/blocklength.hpp"
#include "gfab/config.hpp"

namespace gfab {

struct SimConfig {
    SystemConfig system;
    BlocklengthMatrix n;  // integer symbols
    long horizon = 100000;
    int replications = 1;
    std::uint64_t seed = 1;
    int cr_max_retx = 1000;
    ContentionModel contention = ContentionModel::AllUsers;
    ErrorDrawModel error_model = ErrorDrawModel::Linearized;
    int threads = 1;
    int initial_queue = 0;  // packets queued per user at time 0, at most Q_th

    /// Simulator settings and seed taken from `cfg`; n is rounded to integers.
    static SimConfig from_system(const SystemConfig& cfg, const BlocklengthMatrix& n);
    void validate() const;
};

struct CellStats {
    long attempts = 0;
    long successes = 0;
    long packets = 0;             // packets delivered from this queue state
    long packet_attempts = 0;     // attempts spent on those packets
    double packet_attempts_sq = 0.0;
    double predicted_active = 0.0;  // sum over attempts of (1 - 1/M)^(contenders - 1)
};

struct UserSimStats {
    std::vector<CellStats> cells;  // indexed by queue state 0..Q_th
    std::vector<long> queue_hist;  // queue length after each slot
    long generated = 0;
    long succeeded = 0;
    long dropped_overflow = 0;
    long dropped_cr = 0;
    long queued_at_end = 0;
};

struct DelaySummary {
    long count = 0;
    double mean_ms = 0.0;
    double ci95_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
};

struct SimStats {
    std::vector<UserSimStats> users;
    DelaySummary queuing;
    DelaySummary transmission;
    DelaySummary access;
    long slots = 0;  // per replication times replications

    int user_count() const { return static_cast<int>(users.size()); }
    int blocks() const { return users.empty() ? 0 : static_cast<int>(users[0].cells.size()); }

    double success_rate(int k, int q) const;
    double success_ci95(int k, int q) const;
    double mean_attempts(int k, int q) const;
    std::vector<double> queue_distribution(int k) const;
    long total_generated() const;
    long total_dropped() const;
};

SimStats simulate(const SimConfig& sc);

/// Average access delay (ms) of the analytic model, coded independently of
/// the traffic module: the stationary distribution comes from the product
/// form and the delay sums are expanded term by term.
double analytic_access_delay_ms(const SystemConfig& cfg, const BlocklengthMatrix& n);

struct ReportRow {
    std::string quantity;
    int user = -1;
    int block = -1;
    double analytic = 0.0;
    double empirical = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
    bool checked = false;  // |z| > 3 on a checked row flags the report
    bool flagged = false;
};

struct ValidationReport {
    std::vector<ReportRow> rows;
    double max_queue_tv = 0.0;
    double pooled_attempts_rel_error = 0.0;
    int flagged = 0;

    bool passed() const { return flagged == 0; }
};

/// Side-by-side analytic and empirical quantities with z-scores. Success
/// probabilities and mean attempts are checked at |z| <= 3, per-user queue
/// distributions at total variation <= 0.05.
ValidationReport empirical_vs_analytic_report(const SimStats& ss, const SystemConfig& cfg,
                                              const BlocklengthMatrix& n);

std::string report_csv(const ValidationReport& report);
std::string sim_cells_csv(const SimStats& ss, const BlocklengthMatrix& n);
std::string sim_summary_text(const SimStats& ss);

}  // namespace gfab
