#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gfab/config.hpp"
#include "gfab/experiments.hpp"
#include "gfab/traffic.hpp"

using namespace gfab;

#ifndef GFAB_SOURCE_DIR
#define GFAB_SOURCE_DIR "."
#endif

namespace {

std::string remove_line(std::string text, const std::string& prefix) {
    std::istringstream in(text);
    std::string out, line;
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) continue;
        out += line + "\n";
    }
    return out;
}

std::string error_key(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

}  // namespace

TEST_CASE("config round trip") {
    SystemConfig cfg;
    CHECK(parse_config(serialize_config(cfg)) == cfg);

    cfg.k_users = 7;
    cfg.w_hz = 1.25e6;
    cfg.b_bits = 123.456789;
    cfg.baseline_ttis_ms = {2.0, 0.125, 1.0 / 3.0};
    cfg.optimizer.tau = 0.37;
    cfg.optimizer.warm_start = false;
    cfg.optimizer.eps_mode = RateEpsMode::Fixed;
    cfg.simulator.contention = ContentionModel::ActiveUsers;
    cfg.simulator.error_model = ErrorDrawModel::NormalApprox;
    cfg.experiment.seed = 0xfffffffffffull;
    cfg.experiment.k_grid = {3, 9};
    cfg.experiment.lambda_list = {0.1};
    const SystemConfig back = parse_config(serialize_config(cfg));
    CHECK(back == cfg);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_hash(back) != config_hash(SystemConfig{}));
    CHECK(config_hash(cfg).size() == 16);

    const auto path = std::filesystem::temp_directory_path() / "gfab_roundtrip.ini";
    save_config(cfg, path.string());
    CHECK(load_config(path.string()) == cfg);
    std::filesystem::remove(path);
}

TEST_CASE("config errors name the key") {
    const std::string text = serialize_config(SystemConfig{});
    CHECK(error_key(remove_line(text, "w_hz")) == "system.w_hz");
    CHECK(error_key(remove_line(text, "lambda_rate")) == "traffic.lambda_rate");
    std::string typo = text;
    typo.replace(typo.find("[system]\n"), 9, "[system]\nw_hzz = 1\n");
    CHECK(error_key(typo) == "system.w_hzz");
    CHECK(error_key(text + "\n[bogus]\nx = 1\n") != "");
    std::string zero = text;
    zero.replace(zero.find("k_users = 20"), 12, "k_users = 0");
    CHECK(error_key(zero) == "system.k_users");

    std::string bad = text;
    bad.replace(bad.find("w_hz = 1e+06"), 12, "w_hz = abc");
    CHECK(error_key(bad) == "system.w_hz");
    std::string neg = text;
    neg.replace(neg.find("w_hz = 1e+06"), 12, "w_hz = -5");
    CHECK(error_key(neg) == "system.w_hz");
    std::string mode = text;
    mode.replace(mode.find("contention = all"), 16, "contention = foo");
    CHECK(error_key(mode) == "simulator.contention");

    CHECK_THROWS_AS(load_config("/nonexistent/gfab.ini"), ConfigError);
}

TEST_CASE("optional sections fall back to defaults") {
    const SystemConfig cfg = parse_config(
        "[system]\nk_users = 5\nm_pre = 20\nw_hz = 1e6\np0_dbm = -90\nnoise_dbm = -90\nb_bits = 100\n"
        "q_th = 5\nd_p_ms = 1\nbaseline_ttis_ms = 1, 0.5\n[traffic]\nlambda_rate = 0.4\nt_max_s = 1\n");
    CHECK(cfg.k_users == 5);
    CHECK(cfg.optimizer == OptimizerSettings{});
    CHECK(cfg.experiment == ExperimentSettings{});
}

TEST_CASE("shipped reference config") {
    const SystemConfig cfg = load_config(std::string(GFAB_SOURCE_DIR) + "/configs/reference.ini");
    CHECK(cfg.w_hz == 1e6);
    CHECK(cfg.p0_dbm == -90.0);
    CHECK(cfg.m_pre == 20);
    CHECK(cfg.q_th == 5);
    CHECK(cfg.d_p_ms == 1.0);
    CHECK(cfg.baseline_ttis_ms == std::vector<double>{1.0, 0.5});
    CHECK(cfg == SystemConfig{});
}

TEST_CASE("success probability sweep") {
    SystemConfig cfg;
    const std::vector<double> n_grid{100, 400, 1000, 2000};
    const std::vector<int> k_grid{5, 20, 50};
    const auto r = run_success_prob_sweep(cfg, n_grid, k_grid, 2);
    CHECK(r.rows.size() == n_grid.size() * k_grid.size());
    for (size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(r.rows[i].status == "ok");
        if (i % n_grid.size() > 0) CHECK(r.value(i, "p_suc") >= r.value(i - 1, "p_suc"));
        if (i >= n_grid.size()) CHECK(r.value(i, "p_suc") <= r.value(i - n_grid.size(), "p_suc"));
    }
    CHECK(r.series.size() == k_grid.size());
    CHECK_THROWS(run_success_prob_sweep(cfg, {}, k_grid));
}

TEST_CASE("blocklength profile") {
    SystemConfig cfg;
    cfg.k_users = 6;
    const auto r = run_blocklength_profile(cfg);
    CHECK(r.rows.size() == static_cast<size_t>(cfg.blocks()));
    double lo = 1e300, hi = 0.0;
    for (size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(r.value(i, "baseline_1ms_n") == 1000.0);
        CHECK(r.value(i, "baseline_0.5ms_n") == 500.0);
        lo = std::min(lo, r.value(i, "adaptive_n_mean"));
        hi = std::max(hi, r.value(i, "adaptive_n_mean"));
    }
    CHECK(hi > lo);
}

TEST_CASE("CSV format and determinism across thread counts") {
    SystemConfig cfg;
    cfg.experiment.confirm_slots = 2000;
    const std::vector<int> k_grid{2, 4, 6};
    const auto a = run_delay_vs_users(cfg, k_grid, 1);
    const auto b = run_delay_vs_users(cfg, k_grid, 3);
    CHECK(result_csv(a) == result_csv(b));
    CHECK(plot_data_csv(a) == plot_data_csv(b));

    const std::string csv = result_csv(a);
    CHECK(csv.find("# config_hash " + config_hash(cfg)) != std::string::npos);
    CHECK(csv.find("# seed 1\n") != std::string::npos);
    CHECK(csv.find(std::string("# version ") + kVersion) != std::string::npos);
    CHECK(csv.find("k_users,adaptive_ms,baseline_1ms,baseline_0.5ms,sim_access_ms,sim_ci95_ms,adaptive_n_mean,"
                   "outer_iters,status\n") != std::string::npos);
    CHECK(csv.find("nan") == std::string::npos);
    CHECK(csv.find("inf") == std::string::npos);
    CHECK(plot_data_csv(a).rfind("series,x,y\n", 0) == 0);

    cfg.experiment.seed = 2;
    CHECK(result_csv(run_delay_vs_users(cfg, k_grid, 1)) != csv);
}

TEST_CASE("failed grid points are flagged and the sweep continues") {
    SystemConfig cfg;
    cfg.experiment.confirm_slots = 0;
    cfg.m_pre = 1;  // every attempt collides once K > 1
    const auto r = run_delay_vs_users(cfg, {1, 3}, 1);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].status == "ok");
    CHECK(r.rows[1].status != "ok");
    CHECK(r.value(1, "k_users") == 3.0);
    CHECK(std::isnan(r.value(1, "adaptive_ms")));
    const std::string csv = result_csv(r);
    CHECK(csv.find("nan") == std::string::npos);
    CHECK(csv.find("\n3,,,,") != std::string::npos);
}

TEST_CASE("emit files") {
    SystemConfig cfg;
    const auto r = run_success_prob_sweep(cfg, {200, 400}, {10}, 1);
    const auto dir = std::filesystem::temp_directory_path();
    emit_csv(r, (dir / "gfab_sp.csv").string());
    emit_plot_data(r, (dir / "gfab_sp_plot.csv").string());
    std::ifstream in(dir / "gfab_sp.csv", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == result_csv(r));
    std::filesystem::remove(dir / "gfab_sp.csv");
    std::filesystem::remove(dir / "gfab_sp_plot.csv");
}
