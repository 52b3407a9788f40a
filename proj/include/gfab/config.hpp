#pragma once

// Scenario configuration shared by the analytic model, the optimizer, the
// simulator and the experiment harness.
//
// On disk the configuration is an INI-style file with the sections
// [system] [traffic] [optimizer] [simulator] [experiment]. Keys in [system]
// and [traffic] are required; the remaining sections fall back to defaults.
// Unknown sections or keys are rejected.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gfab/fb_channel.hpp"

namespace gfab {

struct TrafficParams;

/// Error raised while reading or validating a configuration; carries the
/// offending key as "section.key".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// How the target error in the rate constraint is chosen.
enum class RateEpsMode {
    SelfConsistent,  // eps = mean packet error at the current blocklength
    Fixed,           // eps = OptimizerSettings::eps_fixed
};

struct OptimizerSettings {
    double omega = 1e3;        // penalty factor, s/bit^2
    double tau = 1.0;          // augmented-Lagrangian step
    double tol_inner = 1e-8;   // |dL_q| stop, in the block's ms units
    double tol_outer = 1e-6;   // |dD_ave| stop, seconds
    int inner_cap = 500;
    int outer_cap = 50;
    double n0_tti_ms = 1.0;    // initial blocklength = W * n0_tti
    double n_min = 1.0;        // y-update search interval, symbols
    double n_max = 1e5;
    int golden_iters = 60;
    int bracket_points = 64;   // log-spaced scan that brackets the golden search
    bool warm_start = true;    // false: every sweep restarts blocks from n0
    RateEpsMode eps_mode = RateEpsMode::SelfConsistent;
    double eps_fixed = 1e-3;

    bool operator==(const OptimizerSettings&) const = default;
};

enum class ContentionModel {
    AllUsers,     // every one of the K users draws a preamble in every slot
    ActiveUsers,  // only backlogged users draw preambles
};

enum class ErrorDrawModel {
    Linearized,   // piecewise-linear error at the sampled SNR
    NormalApprox, // normal-approximation error at the sampled SNR
};

struct SimulatorSettings {
    long slots = 100000;       // attempt slots per replication
    int replications = 1;
    int cr_max_retx = 1000;    // contention-resolution timer as an attempt cap
    ContentionModel contention = ContentionModel::AllUsers;
    ErrorDrawModel error_model = ErrorDrawModel::Linearized;

    bool operator==(const SimulatorSettings&) const = default;
};

struct ExperimentSettings {
    std::uint64_t seed = 1;
    std::vector<int> k_grid{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
    std::vector<double> b_grid{50, 100, 150, 200, 250, 300, 350, 400};
    std::vector<double> n_grid{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000,
                               1200, 1400, 1600, 1800, 2000};
    std::vector<double> lambda_list{0.2, 0.4};
    long confirm_slots = 20000;  // simulator slots used to confirm adaptive points

    bool operator==(const ExperimentSettings&) const = default;
};

struct SystemConfig {
    // [system]
    int k_users = 20;
    int m_pre = 20;
    double w_hz = 1e6;
    double p0_dbm = -90.0;
    double noise_dbm = -90.0;
    double b_bits = 100.0;
    int q_th = 5;
    double d_p_ms = 1.0;
    std::vector<double> baseline_ttis_ms{1.0, 0.5};
    // [traffic]
    double lambda_rate = 0.4;
    double t_max_s = 1.0;

    OptimizerSettings optimizer;
    SimulatorSettings simulator;
    ExperimentSettings experiment;

    ChannelParams channel() const { return ChannelParams::from_dbm(p0_dbm, noise_dbm); }
    TrafficParams traffic() const;
    double d_p_s() const { return d_p_ms * 1e-3; }
    int blocks() const { return q_th + 1; }

    /// Throws ConfigError naming the first out-of-range key.
    void validate() const;

    bool operator==(const SystemConfig&) const = default;
};

SystemConfig parse_config(const std::string& text);
SystemConfig load_config(const std::string& path);
std::string serialize_config(const SystemConfig& cfg);
void save_config(const SystemConfig& cfg, const std::string& path);

/// FNV-1a over the serialized form, as 16 hex digits.
std::string config_hash(const SystemConfig& cfg);

}  // namespace gfab
