#include "gfab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "gfab/traffic.hpp"

namespace gfab {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        throw ConfigError(key, "expected a finite number, got '" + raw + "'");
    }
    return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    Int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(key, "expected an integer, got '" + raw + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError(key, "expected true or false, got '" + raw + "'");
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> items;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(trim(item));
    if (items.size() == 1 && items[0].empty()) items.clear();
    return items;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& raw, Parse parse) {
    std::vector<T> out;
    for (const auto& item : split_list(raw)) out.push_back(parse(key, item));
    if (out.empty()) throw ConfigError(key, "list must not be empty");
    return out;
}

template <typename T, typename Format>
std::string format_list(const std::vector<T>& values, Format format) {
    std::string out;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format(values[i]);
    }
    return out;
}

struct Field {
    std::string section;
    std::string key;
    bool required;
    std::function<void(SystemConfig&, const std::string& path, const std::string& raw)> parse;
    std::function<std::string(const SystemConfig&)> format;
};

template <typename T>
Field number_field(std::string section, std::string key, bool required, T SystemConfig::*member) {
    Field f{section, key, required, nullptr, nullptr};
    f.parse = [member](SystemConfig& c, const std::string& path, const std::string& raw) {
        if constexpr (std::is_floating_point_v<T>) {
            c.*member = parse_double(path, raw);
        } else {
            c.*member = parse_int<T>(path, raw);
        }
    };
    f.format = [member](const SystemConfig& c) {
        if constexpr (std::is_floating_point_v<T>) {
            return format_double(c.*member);
        } else {
            return std::to_string(c.*member);
        }
    };
    return f;
}

// Field bound to a member of a nested settings struct.
template <typename Outer, typename T>
Field nested_field(std::string section, std::string key, Outer SystemConfig::*outer, T Outer::*member) {
    Field f{section, key, false, nullptr, nullptr};
    f.parse = [outer, member](SystemConfig& c, const std::string& path, const std::string& raw) {
        T& dst = (c.*outer).*member;
        if constexpr (std::is_same_v<T, bool>) {
            dst = parse_bool(path, raw);
        } else if constexpr (std::is_floating_point_v<T>) {
            dst = parse_double(path, raw);
        } else {
            dst = parse_int<T>(path, raw);
        }
    };
    f.format = [outer, member](const SystemConfig& c) -> std::string {
        const T& v = (c.*outer).*member;
        if constexpr (std::is_same_v<T, bool>) {
            return v ? "true" : "false";
        } else if constexpr (std::is_floating_point_v<T>) {
            return format_double(v);
        } else {
            return std::to_string(v);
        }
    };
    return f;
}

template <typename Outer, typename Enum>
Field enum_field(std::string section, std::string key, Outer SystemConfig::*outer, Enum Outer::*member,
                 std::vector<std::pair<Enum, std::string>> names) {
    Field f{section, key, false, nullptr, nullptr};
    f.parse = [outer, member, names](SystemConfig& c, const std::string& path, const std::string& raw) {
        const std::string s = trim(raw);
        for (const auto& [value, name] : names) {
            if (name == s) {
                (c.*outer).*member = value;
                return;
            }
        }
        std::string allowed;
        for (const auto& [value, name] : names) allowed += (allowed.empty() ? "" : "|") + name;
        throw ConfigError(path, "expected one of " + allowed + ", got '" + raw + "'");
    };
    f.format = [outer, member, names](const SystemConfig& c) {
        for (const auto& [value, name] : names) {
            if (value == (c.*outer).*member) return name;
        }
        return std::string("?");
    };
    return f;
}

const std::vector<std::string>& section_order() {
    static const std::vector<std::string> order{"system", "traffic", "optimizer", "simulator", "experiment"};
    return order;
}

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = [] {
        std::vector<Field> f;
        f.push_back(number_field("system", "k_users", true, &SystemConfig::k_users));
        f.push_back(number_field("system", "m_pre", true, &SystemConfig::m_pre));
        f.push_back(number_field("system", "w_hz", true, &SystemConfig::w_hz));
        f.push_back(number_field("system", "p0_dbm", true, &SystemConfig::p0_dbm));
        f.push_back(number_field("system", "noise_dbm", true, &SystemConfig::noise_dbm));
        f.push_back(number_field("system", "b_bits", true, &SystemConfig::b_bits));
        f.push_back(number_field("system", "q_th", true, &SystemConfig::q_th));
        f.push_back(number_field("system", "d_p_ms", true, &SystemConfig::d_p_ms));
        f.push_back(Field{"system", "baseline_ttis_ms", true,
                          [](SystemConfig& c, const std::string& path, const std::string& raw) {
                              c.baseline_ttis_ms = parse_list<double>(path, raw, parse_double);
                          },
                          [](const SystemConfig& c) { return format_list(c.baseline_ttis_ms, format_double); }});

        f.push_back(number_field("traffic", "lambda_rate", true, &SystemConfig::lambda_rate));
        f.push_back(number_field("traffic", "t_max_s", true, &SystemConfig::t_max_s));

        using O = OptimizerSettings;
        const auto opt = &SystemConfig::optimizer;
        f.push_back(nested_field("optimizer", "omega", opt, &O::omega));
        f.push_back(nested_field("optimizer", "tau", opt, &O::tau));
        f.push_back(nested_field("optimizer", "tol_inner", opt, &O::tol_inner));
        f.push_back(nested_field("optimizer", "tol_outer", opt, &O::tol_outer));
        f.push_back(nested_field("optimizer", "inner_cap", opt, &O::inner_cap));
        f.push_back(nested_field("optimizer", "outer_cap", opt, &O::outer_cap));
        f.push_back(nested_field("optimizer", "n0_tti_ms", opt, &O::n0_tti_ms));
        f.push_back(nested_field("optimizer", "n_min", opt, &O::n_min));
        f.push_back(nested_field("optimizer", "n_max", opt, &O::n_max));
        f.push_back(nested_field("optimizer", "golden_iters", opt, &O::golden_iters));
        f.push_back(nested_field("optimizer", "bracket_points", opt, &O::bracket_points));
        f.push_back(nested_field("optimizer", "warm_start", opt, &O::warm_start));
        f.push_back(enum_field("optimizer", "eps_mode", opt, &O::eps_mode,
                               std::vector<std::pair<RateEpsMode, std::string>>{{RateEpsMode::SelfConsistent, "self"}, {RateEpsMode::Fixed, "fixed"}}));
        f.push_back(nested_field("optimizer", "eps_fixed", opt, &O::eps_fixed));

        using S = SimulatorSettings;
        const auto sim = &SystemConfig::simulator;
        f.push_back(nested_field("simulator", "slots", sim, &S::slots));
        f.push_back(nested_field("simulator", "replications", sim, &S::replications));
        f.push_back(nested_field("simulator", "cr_max_retx", sim, &S::cr_max_retx));
        f.push_back(enum_field("simulator", "contention", sim, &S::contention,
                               std::vector<std::pair<ContentionModel, std::string>>{{ContentionModel::AllUsers, "all"}, {ContentionModel::ActiveUsers, "active"}}));
        f.push_back(enum_field("simulator", "error_model", sim, &S::error_model,
                               std::vector<std::pair<ErrorDrawModel, std::string>>{{ErrorDrawModel::Linearized, "linear"}, {ErrorDrawModel::NormalApprox, "normal"}}));

        using E = ExperimentSettings;
        const auto exp = &SystemConfig::experiment;
        f.push_back(nested_field("experiment", "seed", exp, &E::seed));
        f.push_back(Field{"experiment", "k_grid", false,
                          [](SystemConfig& c, const std::string& path, const std::string& raw) {
                              c.experiment.k_grid = parse_list<int>(path, raw, parse_int<int>);
                          },
                          [](const SystemConfig& c) {
                              return format_list(c.experiment.k_grid, [](int v) { return std::to_string(v); });
                          }});
        f.push_back(Field{"experiment", "b_grid", false,
                          [](SystemConfig& c, const std::string& path, const std::string& raw) {
                              c.experiment.b_grid = parse_list<double>(path, raw, parse_double);
                          },
                          [](const SystemConfig& c) { return format_list(c.experiment.b_grid, format_double); }});
        f.push_back(Field{"experiment", "n_grid", false,
                          [](SystemConfig& c, const std::string& path, const std::string& raw) {
                              c.experiment.n_grid = parse_list<double>(path, raw, parse_double);
                          },
                          [](const SystemConfig& c) { return format_list(c.experiment.n_grid, format_double); }});
        f.push_back(Field{"experiment", "lambda_list", false,
                          [](SystemConfig& c, const std::string& path, const std::string& raw) {
                              c.experiment.lambda_list = parse_list<double>(path, raw, parse_double);
                          },
                          [](const SystemConfig& c) {
                              return format_list(c.experiment.lambda_list, format_double);
                          }});
        f.push_back(nested_field("experiment", "confirm_slots", exp, &E::confirm_slots));
        return f;
    }();
    return fields;
}

void check(bool ok, const std::string& key, const std::string& message) {
    if (!ok) throw ConfigError(key, message);
}

}  // namespace

TrafficParams SystemConfig::traffic() const { return TrafficParams{lambda_rate, t_max_s, q_th}; }

void SystemConfig::validate() const {
    check(k_users >= 1, "system.k_users", "must be >= 1");
    check(m_pre >= 1, "system.m_pre", "must be >= 1");
    check(w_hz > 0.0, "system.w_hz", "must be > 0");
    check(b_bits > 0.0, "system.b_bits", "must be > 0");
    check(q_th >= 0, "system.q_th", "must be >= 0");
    check(d_p_ms >= 0.0, "system.d_p_ms", "must be >= 0");
    check(!baseline_ttis_ms.empty(), "system.baseline_ttis_ms", "must not be empty");
    for (double t : baseline_ttis_ms) check(t > 0.0, "system.baseline_ttis_ms", "entries must be > 0");
    check(lambda_rate >= 0.0, "traffic.lambda_rate", "must be >= 0");
    check(t_max_s > 0.0, "traffic.t_max_s", "must be > 0");

    check(optimizer.omega > 0.0, "optimizer.omega", "must be > 0");
    check(optimizer.tau > 0.0, "optimizer.tau", "must be > 0");
    check(optimizer.tol_inner > 0.0, "optimizer.tol_inner", "must be > 0");
    check(optimizer.tol_outer > 0.0, "optimizer.tol_outer", "must be > 0");
    check(optimizer.inner_cap >= 1, "optimizer.inner_cap", "must be >= 1");
    check(optimizer.outer_cap >= 1, "optimizer.outer_cap", "must be >= 1");
    check(optimizer.n0_tti_ms > 0.0, "optimizer.n0_tti_ms", "must be > 0");
    check(optimizer.n_min > 0.0, "optimizer.n_min", "must be > 0");
    check(optimizer.n_max > optimizer.n_min, "optimizer.n_max", "must exceed optimizer.n_min");
    check(optimizer.golden_iters >= 1, "optimizer.golden_iters", "must be >= 1");
    check(optimizer.bracket_points >= 3, "optimizer.bracket_points", "must be >= 3");
    check(optimizer.eps_fixed > 0.0 && optimizer.eps_fixed < 1.0, "optimizer.eps_fixed", "must lie in (0,1)");

    check(simulator.slots >= 1, "simulator.slots", "must be >= 1");
    check(simulator.replications >= 1, "simulator.replications", "must be >= 1");
    check(simulator.cr_max_retx >= 1, "simulator.cr_max_retx", "must be >= 1");

    check(!experiment.k_grid.empty(), "experiment.k_grid", "must not be empty");
    for (int k : experiment.k_grid) check(k >= 1, "experiment.k_grid", "entries must be >= 1");
    for (double b : experiment.b_grid) check(b > 0.0, "experiment.b_grid", "entries must be > 0");
    for (double n : experiment.n_grid) check(n > 0.0, "experiment.n_grid", "entries must be > 0");
    for (double l : experiment.lambda_list) check(l >= 0.0, "experiment.lambda_list", "entries must be >= 0");
    check(experiment.confirm_slots >= 0, "experiment.confirm_slots", "must be >= 0");
}

SystemConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", std::string("malformed config: ") + e.message() + " (line " +
                                  std::to_string(e.line()) + ")");
    }

    const auto& known_sections = section_order();
    std::set<std::string> seen;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of any section");
        if (std::find(known_sections.begin(), known_sections.end(), section) == known_sections.end()) {
            throw ConfigError(section, "unknown section");
        }
        for (const auto& [key, value] : body) {
            const std::string path = section + "." + key;
            bool known = false;
            for (const auto& f : schema()) known |= (f.section == section && f.key == key);
            if (!known) throw ConfigError(path, "unknown key");
            seen.insert(path);
        }
    }

    SystemConfig cfg;
    for (const auto& f : schema()) {
        const std::string path = f.section + "." + f.key;
        if (!seen.count(path)) {
            if (f.required) throw ConfigError(path, "missing required key");
            continue;
        }
        f.parse(cfg, path, tree.get_child(f.section).get<std::string>(f.key));
    }
    cfg.validate();
    return cfg;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const SystemConfig& cfg) {
    std::string out;
    for (const auto& section : section_order()) {
        if (!out.empty()) out += "\n";
        out += "[" + section + "]\n";
        for (const auto& f : schema()) {
            if (f.section == section) out += f.key + " = " + f.format(cfg) + "\n";
        }
    }
    return out;
}

void save_config(const SystemConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("", "cannot write config file " + path);
    out << serialize_config(cfg);
}

std::string config_hash(const SystemConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : serialize_config(cfg)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace gfab
