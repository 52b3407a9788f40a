#pragma once

// Sweeps behind the figures: success probability over (n, K), delay over K,
// delay over (B, lambda) and the optimised blocklength profile. Grid points
// run on a worker pool and are merged in grid order, so the output does not
// depend on the thread count.

#include <string>
#include <vector>

#include "gfab/config.hpp"

namespace gfab {

inline constexpr const char* kVersion = "0.1.0";

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = kVersion;
};

/// One grid point. A failed point keeps its grid coordinates and leaves the
/// outputs empty; `status` says why.
struct ResultRow {
    std::vector<double> values;  // one per column, NaN where empty
    std::string status = "ok";
};

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct ExperimentResult {
    std::string id;
    std::string swept;          // swept parameter name(s)
    std::vector<double> grid;   // primary grid
    std::vector<std::string> columns;
    std::vector<ResultRow> rows;
    std::vector<PlotSeries> series;
    Provenance provenance;

    size_t column(const std::string& name) const;
    double value(size_t row, const std::string& name) const { return rows[row].values[column(name)]; }
};

/// p_suc for every (K, n) pair. Rows are K-major.
ExperimentResult run_success_prob_sweep(const SystemConfig& cfg, const std::vector<double>& n_grid,
                                        const std::vector<int>& k_grid, int threads = 1);

/// Adaptive and baseline delays per K, with a simulated confirmation of the
/// adaptive point over experiment.confirm_slots slots (0 disables it).
ExperimentResult run_delay_vs_users(const SystemConfig& cfg, const std::vector<int>& k_grid, int threads = 1);

/// Adaptive and baseline delays per (lambda, B). Rows are lambda-major.
ExperimentResult run_delay_vs_bits(const SystemConfig& cfg, const std::vector<double>& b_grid,
                                   const std::vector<double>& lambda_list, int threads = 1);

/// Optimised n per block index (mean, min, max over users) next to the
/// constant baseline blocklengths.
ExperimentResult run_blocklength_profile(const SystemConfig& cfg);

/// Header-first CSV. Provenance goes in leading '#' lines; delays use 6
/// significant digits; empty cells mark failed points.
std::string result_csv(const ExperimentResult& result);
/// series,x,y rows.
std::string plot_data_csv(const ExperimentResult& result);

void emit_csv(const ExperimentResult& result, const std::string& path);
void emit_plot_data(const ExperimentResult& result, const std::string& path);

/// "baseline_1ms", "baseline_0.5ms", ...
std::string baseline_column(double tti_ms);

}  // namespace gfab
