#include "gfab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gfab/delay_model.hpp"
#include "gfab/fb_channel.hpp"
#include "gfab/optimizer.hpp"
#include "gfab/parallel.hpp"
#include "gfab/simulator.hpp"
#include "gfab/traffic.hpp"

namespace gfab {

namespace {

constexpr double kEmpty = std::numeric_limits<double>::quiet_NaN();

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

ExperimentResult make_result(const SystemConfig& cfg, std::string id, std::string swept,
                             std::vector<std::string> columns) {
    ExperimentResult r;
    r.id = std::move(id);
    r.swept = std::move(swept);
    r.columns = std::move(columns);
    r.provenance.config_hash = config_hash(cfg);
    r.provenance.seed = cfg.experiment.seed;
    return r;
}

// Runs `fill` on a row that already holds its grid coordinates in the first
// `fixed` cells. Model failures and non-finite outputs blank the remaining
// cells and record the reason.
template <typename Fill>
ResultRow guarded_row(std::vector<double> coords, size_t width, Fill&& fill) {
    ResultRow row;
    const size_t fixed = coords.size();
    row.values = std::move(coords);
    row.values.resize(width, kEmpty);
    try {
        fill(row.values);
        for (size_t i = fixed; i < width; ++i) {
            if (!std::isfinite(row.values[i])) {
                row.status = "non_finite";
                break;
            }
        }
    } catch (const NumericalFailure&) {
        row.status = "numerical_failure";
    } catch (const DegenerateChainError&) {
        row.status = "degenerate_chain";
    } catch (const std::domain_error&) {
        row.status = "domain_error";
    } catch (const std::invalid_argument&) {
        row.status = "invalid_argument";
    }
    if (row.status != "ok") std::fill(row.values.begin() + fixed, row.values.end(), kEmpty);
    return row;
}

std::vector<std::string> delay_columns(const SystemConfig& cfg, std::vector<std::string> head) {
    head.push_back("adaptive_ms");
    for (double t : cfg.baseline_ttis_ms) head.push_back(baseline_column(t));
    return head;
}

// Adaptive delay followed by one delay per baseline, written from `offset`.
AoResult fill_delays(const SystemConfig& cfg, std::vector<double>& v, size_t offset) {
    AoResult ao = alternating_optimize(cfg, default_initial_blocklengths(cfg));
    v[offset] = average_access_delay(ao.n, cfg).average_access_ms;
    for (size_t i = 0; i < cfg.baseline_ttis_ms.size(); ++i) {
        const auto n = BlocklengthMatrix::from_tti(cfg.k_users, cfg.blocks(), cfg.w_hz, cfg.baseline_ttis_ms[i] * 1e-3);
        v[offset + 1 + i] = average_access_delay(n, cfg).average_access_ms;
    }
    return ao;
}

void add_series(ExperimentResult& r, const std::string& name, const std::string& x_col, const std::string& y_col,
                const std::string& filter_col = "", double filter_value = 0.0) {
    PlotSeries s;
    s.name = name;
    const size_t xi = r.column(x_col);
    const size_t yi = r.column(y_col);
    for (const auto& row : r.rows) {
        if (row.status != "ok") continue;
        if (!filter_col.empty() && row.values[r.column(filter_col)] != filter_value) continue;
        s.x.push_back(row.values[xi]);
        s.y.push_back(row.values[yi]);
    }
    r.series.push_back(std::move(s));
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::string baseline_column(double tti_ms) { return "baseline_" + shortest(tti_ms) + "ms"; }

size_t ExperimentResult::column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("no column " + name);
    return static_cast<size_t>(it - columns.begin());
}

ExperimentResult run_success_prob_sweep(const SystemConfig& cfg, const std::vector<double>& n_grid,
                                        const std::vector<int>& k_grid, int threads) {
    if (n_grid.empty() || k_grid.empty()) throw std::invalid_argument("success sweep: empty grid");
    ExperimentResult r = make_result(cfg, "success_prob", "k_users,n_symbols", {"k_users", "n_symbols", "p_suc"});
    r.grid = n_grid;
    r.rows.resize(n_grid.size() * k_grid.size());
    const ChannelParams ch = cfg.channel();
    parallel_for(r.rows.size(), threads, [&](size_t i) {
        const int k = k_grid[i / n_grid.size()];
        const double n = n_grid[i % n_grid.size()];
        r.rows[i] = guarded_row({double(k), n}, 3, [&](std::vector<double>& v) {
            v[2] = success_prob(n, cfg.b_bits, ch, k, cfg.m_pre);
        });
    });
    for (int k : k_grid) add_series(r, "K=" + std::to_string(k), "n_symbols", "p_suc", "k_users", k);
    return r;
}

ExperimentResult run_delay_vs_users(const SystemConfig& cfg, const std::vector<int>& k_grid, int threads) {
    if (k_grid.empty()) throw std::invalid_argument("delay vs users: empty grid");
    auto columns = delay_columns(cfg, {"k_users"});
    columns.insert(columns.end(), {"sim_access_ms", "sim_ci95_ms", "adaptive_n_mean", "outer_iters"});
    ExperimentResult r = make_result(cfg, "delay_vs_users", "k_users", columns);
    r.grid.assign(k_grid.begin(), k_grid.end());
    r.rows.resize(k_grid.size());
    const size_t nb = cfg.baseline_ttis_ms.size();
    parallel_for(k_grid.size(), threads, [&](size_t i) {
        SystemConfig c = cfg;
        c.k_users = k_grid[i];
        r.rows[i] = guarded_row({double(k_grid[i])}, columns.size(), [&](std::vector<double>& v) {
            c.validate();
            const AoResult ao = fill_delays(c, v, 1);
            const size_t at = 2 + nb;
            if (c.experiment.confirm_slots > 0) {
                SimConfig sc = SimConfig::from_system(c, ao.n);
                sc.horizon = c.experiment.confirm_slots;
                const SimStats ss = simulate(sc);
                v[at] = ss.access.mean_ms;
                v[at + 1] = ss.access.ci95_ms;
            } else {
                v[at] = 0.0;
                v[at + 1] = 0.0;
            }
            double sum = 0.0;
            for (double x : ao.n.values()) sum += x;
            v[at + 2] = sum / ao.n.values().size();
            v[at + 3] = ao.outer_iters;
        });
    });
    add_series(r, "adaptive", "k_users", "adaptive_ms");
    for (double t : cfg.baseline_ttis_ms) add_series(r, baseline_column(t), "k_users", baseline_column(t));
    if (cfg.experiment.confirm_slots > 0) add_series(r, "simulated", "k_users", "sim_access_ms");
    return r;
}

ExperimentResult run_delay_vs_bits(const SystemConfig& cfg, const std::vector<double>& b_grid,
                                   const std::vector<double>& lambda_list, int threads) {
    if (b_grid.empty() || lambda_list.empty()) throw std::invalid_argument("delay vs bits: empty grid");
    const auto columns = delay_columns(cfg, {"lambda_rate", "b_bits"});
    ExperimentResult r = make_result(cfg, "delay_vs_bits", "lambda_rate,b_bits", columns);
    r.grid = b_grid;
    r.rows.resize(b_grid.size() * lambda_list.size());
    parallel_for(r.rows.size(), threads, [&](size_t i) {
        SystemConfig c = cfg;
        c.lambda_rate = lambda_list[i / b_grid.size()];
        c.b_bits = b_grid[i % b_grid.size()];
        r.rows[i] = guarded_row({c.lambda_rate, c.b_bits}, columns.size(), [&](std::vector<double>& v) {
            c.validate();
            fill_delays(c, v, 2);
        });
    });
    for (double lam : lambda_list) {
        const std::string tag = " lambda=" + shortest(lam);
        add_series(r, "adaptive" + tag, "b_bits", "adaptive_ms", "lambda_rate", lam);
        for (double t : cfg.baseline_ttis_ms) {
            add_series(r, baseline_column(t) + tag, "b_bits", baseline_column(t), "lambda_rate", lam);
        }
    }
    return r;
}

ExperimentResult run_blocklength_profile(const SystemConfig& cfg) {
    cfg.validate();
    std::vector<std::string> columns{"block", "adaptive_n_mean", "adaptive_n_min", "adaptive_n_max"};
    for (double t : cfg.baseline_ttis_ms) columns.push_back(baseline_column(t) + "_n");
    ExperimentResult r = make_result(cfg, "blocklength_profile", "block", columns);
    for (int q = 0; q < cfg.blocks(); ++q) r.grid.push_back(q);

    AoResult ao;
    std::string failure;
    try {
        ao = alternating_optimize(cfg, default_initial_blocklengths(cfg));
    } catch (const NumericalFailure&) {
        failure = "numerical_failure";
    }
    for (int q = 0; q < cfg.blocks(); ++q) {
        r.rows.push_back(guarded_row({double(q)}, columns.size(), [&](std::vector<double>& v) {
            if (!failure.empty()) throw NumericalFailure(failure);
            const auto col = ao.n.column(q);
            double sum = 0.0;
            for (double x : col) sum += x;
            v[1] = sum / col.size();
            v[2] = *std::min_element(col.begin(), col.end());
            v[3] = *std::max_element(col.begin(), col.end());
            for (size_t i = 0; i < cfg.baseline_ttis_ms.size(); ++i) v[4 + i] = cfg.w_hz * cfg.baseline_ttis_ms[i] * 1e-3;
        }));
    }
    add_series(r, "adaptive", "block", "adaptive_n_mean");
    for (double t : cfg.baseline_ttis_ms) add_series(r, baseline_column(t), "block", baseline_column(t) + "_n");
    return r;
}

std::string result_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "# experiment " << result.id << "\n";
    out << "# swept " << result.swept << "\n";
    out << "# config_hash " << result.provenance.config_hash << "\n";
    out << "# seed " << result.provenance.seed << "\n";
    out << "# version " << result.provenance.version << "\n";
    for (const auto& c : result.columns) out << c << ",";
    out << "status\n";
    char buf[64];
    for (const auto& row : result.rows) {
        for (double v : row.values) {
            if (std::isfinite(v)) {
                std::snprintf(buf, sizeof(buf), "%.6g", v);
                out << buf;
            }
            out << ",";
        }
        out << row.status << "\n";
    }
    return out.str();
}

std::string plot_data_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "series,x,y\n";
    char buf[160];
    for (const auto& s : result.series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g\n", s.name.c_str(), s.x[i], s.y[i]);
            out << buf;
        }
    }
    return out.str();
}

void emit_csv(const ExperimentResult& result, const std::string& path) { write_file(path, result_csv(result)); }

void emit_plot_data(const ExperimentResult& result, const std::string& path) {
    write_file(path, plot_data_csv(result));
}

}  // namespace gfab
