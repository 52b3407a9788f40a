// Command-line front end: analyze, optimize, simulate, sweep, validate.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 validation failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gfab/config.hpp"
#include "gfab/delay_model.hpp"
#include "gfab/experiments.hpp"
#include "gfab/optimizer.hpp"
#include "gfab/simulator.hpp"
#include "gfab/traffic.hpp"

namespace fs = std::filesystem;
using namespace gfab;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kValidation = 3 };

struct Globals {
    std::string config_path;
    long long seed = -1;
    std::string out_dir = ".";
    int threads = 1;
};

SystemConfig load(const Globals& g) {
    SystemConfig cfg = g.config_path.empty() ? SystemConfig{} : load_config(g.config_path);
    if (g.seed >= 0) cfg.experiment.seed = static_cast<std::uint64_t>(g.seed);
    cfg.validate();
    return cfg;
}

std::string out_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

void write(const Globals& g, const std::string& name, const std::string& text) {
    const std::string path = out_path(g, name);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    std::cout << "wrote " << path << "\n";
}

std::string matrix_csv(const BlocklengthMatrix& n) {
    std::ostringstream out;
    out << "user,block,n_symbols\n";
    char buf[96];
    for (int k = 0; k < n.users(); ++k) {
        for (int q = 0; q < n.blocks(); ++q) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.10g\n", k, q, n(k, q));
            out << buf;
        }
    }
    return out.str();
}

BlocklengthMatrix fixed_tti(const SystemConfig& cfg, double tti_ms) {
    return BlocklengthMatrix::from_tti(cfg.k_users, cfg.blocks(), cfg.w_hz, tti_ms * 1e-3);
}

// --tti-ms when given, the optimizer's rounded result otherwise.
BlocklengthMatrix chosen_blocklengths(const SystemConfig& cfg, double tti_ms) {
    if (tti_ms > 0.0) return fixed_tti(cfg, tti_ms).rounded();
    return alternating_optimize(cfg, default_initial_blocklengths(cfg)).n_rounded;
}

int cmd_analyze(const Globals& g, double tti_ms) {
    const SystemConfig cfg = load(g);
    const DelayModel model(cfg);
    std::vector<double> ttis = cfg.baseline_ttis_ms;
    if (tti_ms > 0.0) ttis = {tti_ms};
    std::ostringstream out;
    out << "tti_ms,user,queuing_ms,transmission_ms,access_ms\n";
    char buf[160];
    for (double t : ttis) {
        const DelayBreakdown bd = model.evaluate(fixed_tti(cfg, t));
        for (size_t k = 0; k < bd.users.size(); ++k) {
            const auto& u = bd.users[k];
            std::snprintf(buf, sizeof(buf), "%.6g,%zu,%.6g,%.6g,%.6g\n", t, k, u.queuing_ms, u.transmission_ms,
                          u.access_ms);
            out << buf;
        }
        std::printf("tti %.6g ms: average access delay %.6g ms\n", t, bd.average_access_ms);
    }
    write(g, "analyze.csv", out.str());
    return kOk;
}

int cmd_optimize(const Globals& g, bool cold_start, double fixed_eps) {
    SystemConfig cfg = load(g);
    if (cold_start) cfg.optimizer.warm_start = false;
    if (fixed_eps > 0.0) {
        cfg.optimizer.eps_mode = RateEpsMode::Fixed;
        cfg.optimizer.eps_fixed = fixed_eps;
        cfg.validate();
    }
    const AoResult r = alternating_optimize(cfg, default_initial_blocklengths(cfg));
    write(g, "optimize_n.csv", matrix_csv(r.n));
    write(g, "optimize_trace.csv", trace_csv(r));
    std::printf("outer iterations %d, converged %s\n", r.outer_iters, r.converged ? "yes" : "no");
    std::printf("objective %.6g ms (initial %.6g ms), rounded %.6g ms\n", 1e3 * r.objective_s,
                1e3 * r.initial_objective_s, 1e3 * r.rounded_objective_s);
    return kOk;
}

int cmd_simulate(const Globals& g, double tti_ms, long slots) {
    const SystemConfig cfg = load(g);
    const BlocklengthMatrix n = chosen_blocklengths(cfg, tti_ms);
    SimConfig sc = SimConfig::from_system(cfg, n);
    sc.threads = g.threads;
    if (slots > 0) sc.horizon = slots;
    const SimStats ss = simulate(sc);
    write(g, "sim_cells.csv", sim_cells_csv(ss, sc.n));
    write(g, "sim_summary.txt", sim_summary_text(ss));
    std::cout << sim_summary_text(ss);
    return kOk;
}

int cmd_validate(const Globals& g, double tti_ms, long slots) {
    const SystemConfig cfg = load(g);
    const BlocklengthMatrix n = chosen_blocklengths(cfg, tti_ms);
    SimConfig sc = SimConfig::from_system(cfg, n);
    sc.threads = g.threads;
    if (slots > 0) sc.horizon = slots;
    const SimStats ss = simulate(sc);
    const ValidationReport rep = empirical_vs_analytic_report(ss, cfg, sc.n);
    write(g, "validation.csv", report_csv(rep));
    std::printf("flagged %d, max queue TV %.4g, pooled attempts rel. error %.4g\n", rep.flagged, rep.max_queue_tv,
                rep.pooled_attempts_rel_error);
    return rep.passed() ? kOk : kValidation;
}

int cmd_sweep(const Globals& g, const std::string& name) {
    const SystemConfig cfg = load(g);
    const auto& ex = cfg.experiment;
    std::vector<ExperimentResult> results;
    const bool all = name == "all";
    if (all || name == "success_prob") results.push_back(run_success_prob_sweep(cfg, ex.n_grid, ex.k_grid, g.threads));
    if (all || name == "delay_vs_users") results.push_back(run_delay_vs_users(cfg, ex.k_grid, g.threads));
    if (all || name == "delay_vs_bits") results.push_back(run_delay_vs_bits(cfg, ex.b_grid, ex.lambda_list, g.threads));
    if (all || name == "blocklength_profile") results.push_back(run_blocklength_profile(cfg));
    int failed = 0;
    for (const auto& r : results) {
        emit_csv(r, out_path(g, r.id + ".csv"));
        emit_plot_data(r, out_path(g, r.id + "_plot.csv"));
        std::cout << "wrote " << r.id << ".csv and " << r.id << "_plot.csv\n";
        for (const auto& row : r.rows) failed += row.status != "ok";
    }
    if (failed) {
        std::cerr << failed << " grid point(s) failed; see the status column\n";
        return kNumerical;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grant-free access delay model, blocklength optimizer and simulator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "INI configuration file (built-in reference values if omitted)");
    app.add_option("--seed", g.seed, "Override experiment.seed")->check(CLI::NonNegativeNumber);
    app.add_option("--out-dir", g.out_dir, "Directory for output files");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

    double tti_ms = 0.0;
    long slots = 0;
    bool cold_start = false;
    double fixed_eps = 0.0;
    std::string sweep_name;

    auto* analyze = app.add_subcommand("analyze", "Analytic delay at fixed TTIs (baselines unless --tti-ms)");
    analyze->add_option("--tti-ms", tti_ms, "TTI in ms")->check(CLI::PositiveNumber);

    auto* optimize = app.add_subcommand("optimize", "Alternating blocklength optimization");
    optimize->add_flag("--cold-start", cold_start, "Restart every block from the initial blocklength");
    optimize->add_option("--fixed-eps", fixed_eps, "Use a fixed target error in the rate constraint")
        ->check(CLI::Range(1e-12, 0.5));

    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo simulation (optimized n unless --tti-ms)");
    auto* validate = app.add_subcommand("validate", "Analytic vs simulated report; exit 3 on a flagged check");
    for (auto* sub : {simulate_cmd, validate}) {
        sub->add_option("--tti-ms", tti_ms, "Fixed TTI in ms")->check(CLI::PositiveNumber);
        sub->add_option("--slots", slots, "Override simulator.slots")->check(CLI::PositiveNumber);
    }

    auto* sweep = app.add_subcommand("sweep", "Figure sweeps: success_prob, delay_vs_users, delay_vs_bits, "
                                              "blocklength_profile or all");
    sweep->add_option("name", sweep_name)
        ->required()
        ->check(CLI::IsMember({"success_prob", "delay_vs_users", "delay_vs_bits", "blocklength_profile", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*analyze) return cmd_analyze(g, tti_ms);
        if (*optimize) return cmd_optimize(g, cold_start, fixed_eps);
        if (*simulate_cmd) return cmd_simulate(g, tti_ms, slots);
        if (*validate) return cmd_validate(g, tti_ms, slots);
        if (*sweep) return cmd_sweep(g, sweep_name);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const DegenerateChainError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
