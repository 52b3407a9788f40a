#include "gfab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace gfab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Grid scan on a log scale to locate the basin, then golden section inside the
// neighbouring grid cells. The linearised error is not unimodal in n (it has a
// spurious low-error region for n below ~pi^2), so a plain golden section over
// the whole interval can settle in the wrong basin.
template <typename F>
double minimize_scalar(F&& h, double lo, double hi, int points, int golden_iters) {
    std::vector<double> grid(points);
    const double log_lo = std::log(lo);
    const double step = (std::log(hi) - log_lo) / (points - 1);
    int best = 0;
    double best_val = kInf;
    for (int i = 0; i < points; ++i) {
        grid[i] = i == points - 1 ? hi : std::exp(log_lo + step * i);
        const double val = h(grid[i]);
        if (val < best_val) {
            best_val = val;
            best = i;
        }
    }
    double a = grid[std::max(best - 1, 0)];
    double b = grid[std::min(best + 1, points - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = h(c);
    double fd = h(d);
    for (int i = 0; i < golden_iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = h(d);
        }
    }
    const double mid = 0.5 * (a + b);
    return h(mid) <= best_val ? mid : grid[best];
}

double inf_norm_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_violation(const BlocklengthMatrix& n, const SystemConfig& cfg) {
    double worst = 0.0;
    for (int k = 0; k < n.users(); ++k) worst = std::max(worst, -rate_constraint_slack(n.row(k), cfg));
    return worst;
}

}  // namespace

double deliverable_bits(double n, const SystemConfig& cfg) {
    const ChannelParams ch = cfg.channel();
    double eps = cfg.optimizer.eps_fixed;
    if (cfg.optimizer.eps_mode == RateEpsMode::SelfConsistent) {
        eps = std::clamp(packet_error_prob(n, cfg.b_bits, ch), 1e-12, 1.0 - 1e-12);
    }
    return achievable_rate(n, ch.snr_avg(), eps) * n;
}

double rate_constraint_slack(std::span<const double> n_row, const SystemConfig& cfg) {
    double supply = 0.0;
    for (double n : n_row) supply += deliverable_bits(n, cfg);
    return supply - expected_arriving_bits(cfg.traffic(), cfg.b_bits);
}

double penalized_objective(const BlocklengthMatrix& n, const SystemConfig& cfg, double omega) {
    const DelayModel model(cfg);
    double delay = 0.0;
    double penalty = 0.0;
    for (int k = 0; k < n.users(); ++k) {
        delay += model.user_delay_or_inf(n.row(k));
        const double shortfall = std::min(rate_constraint_slack(n.row(k), cfg), 0.0);
        penalty += shortfall * shortfall;
    }
    return delay / n.users() + omega * penalty;
}

BlockProblem::BlockProblem(const DelayModel& model, const SystemConfig& cfg, const BlocklengthMatrix& current,
                           int q)
    : model_(model),
      cfg_(cfg),
      q_(q),
      n_scale_(cfg.w_hz * 1e-3),
      z_min_(cfg.optimizer.n_min / n_scale_),
      z_max_(cfg.optimizer.n_max / n_scale_),
      demand_bits_(expected_arriving_bits(cfg.traffic(), cfg.b_bits)) {
    if (q < 0 || q >= current.blocks()) throw std::invalid_argument("BlockProblem: block index out of range");
    rows_.resize(current.users());
    c_.assign(current.users(), 0.0);
    for (int k = 0; k < current.users(); ++k) {
        const auto row = current.row(k);
        RowCache& cache = rows_[k];
        cache.p_suc = model.success_row(row);
        cache.tti.resize(row.size());
        for (size_t j = 0; j < row.size(); ++j) {
            cache.tti[j] = row[j] / cfg.w_hz;
            if (static_cast<int>(j) != q) cache.fixed_bits += deliverable_bits(row[j], cfg);
        }
        const bool live = std::all_of(cache.p_suc.begin(), cache.p_suc.end(), [](double p) { return p > 0.0; });
        if (live) {
            const SteadyState ss = steady_state_from_tails(std::span(cache.p_suc).subspan(1), model.tails());
            double weight = 1.0;
            for (size_t j = q + 1; j < ss.pi.size(); ++j) weight += ss.pi[j];
            // d/dz of 1e3 * (T_q + D_P) E[X_q] (1 + sum_{j>q} pi_j) with T_q = z n_scale / W.
            c_[k] = 1e3 * (n_scale_ / cfg.w_hz) * weight / cache.p_suc[q];
        }
    }
}

double BlockProblem::user_objective(int k, double z) const {
    const double n = z * n_scale_;
    if (!(n > 0.0)) return kInf;
    std::vector<double> tti = rows_[k].tti;
    std::vector<double> p = rows_[k].p_suc;
    tti[q_] = n / cfg_.w_hz;
    p[q_] = model_.success(n);
    for (double v : p) {
        if (!(v > 0.0)) return kInf;
    }
    const double delay = access_delay_seconds(tti, p, model_.tails(), model_.d_p_s());
    const double shortfall = std::min(rows_[k].fixed_bits + deliverable_bits(n, cfg_) - demand_bits_, 0.0);
    return 1e3 * (delay + users() * cfg_.optimizer.omega * shortfall * shortfall);
}

double BlockProblem::objective(std::span<const double> z) const {
    double total = 0.0;
    for (int k = 0; k < users(); ++k) total += user_objective(k, z[k]);
    return total;
}

double BlockProblem::u(std::span<const double> x) const {
    double total = 0.0;
    for (int k = 0; k < users(); ++k) total += c_[k] * x[k];
    return total;
}

double BlockProblem::v(std::span<const double> y) const {
    double total = 0.0;
    for (int k = 0; k < users(); ++k) total += v_user(k, y[k]);
    return total;
}

double BlockProblem::lagrangian(std::span<const double> x, std::span<const double> y,
                                std::span<const double> lambda, double tau) const {
    double coupling = 0.0;
    double quad = 0.0;
    for (int k = 0; k < users(); ++k) {
        const double diff = x[k] - y[k];
        coupling += lambda[k] * diff;
        quad += diff * diff;
    }
    return u(x) + v(y) + coupling + 0.5 * tau * quad;
}

std::vector<double> BlockProblem::to_scaled(std::span<const double> n) const {
    std::vector<double> z(n.size());
    for (size_t i = 0; i < n.size(); ++i) z[i] = n[i] / n_scale_;
    return z;
}

std::vector<double> BlockProblem::to_symbols(std::span<const double> z) const {
    std::vector<double> n(z.size());
    for (size_t i = 0; i < z.size(); ++i) n[i] = z[i] * n_scale_;
    return n;
}

BlockResult admm_block_solve(const BlockProblem& problem, std::span<const double> start_symbols,
                             const OptimizerSettings& settings) {
    const int users = problem.users();
    const double tau = settings.tau;
    const auto& c = problem.u_coefficients();

    BlockResult result;
    OptimizerState& st = result.state;
    st.block = problem.block();
    st.tau = tau;
    st.omega = settings.omega;
    st.y = problem.to_scaled(start_symbols);
    for (double& z : st.y) z = std::clamp(z, problem.z_min(), problem.z_max());
    st.x = st.y;
    st.lambda.assign(users, 0.0);

    result.best_y = st.y;
    result.best_objective = problem.objective(st.y);
    double l_prev = problem.lagrangian(st.x, st.y, st.lambda, tau);

    for (int l = 1; l <= settings.inner_cap; ++l) {
        st.inner_iter = l;
        for (int k = 0; k < users; ++k) {
            st.x[k] = std::max(0.0, st.y[k] - (c[k] + st.lambda[k]) / tau);
            if (!(st.x[k] >= 0.0)) throw NumericalFailure("x-update left the non-negative orthant");
        }
        for (int k = 0; k < users; ++k) {
            const double xk = st.x[k];
            const double lk = st.lambda[k];
            auto h = [&](double z) {
                const double diff = xk - z;
                return problem.v_user(k, z) - lk * z + 0.5 * tau * diff * diff;
            };
            st.y[k] = minimize_scalar(h, problem.z_min(), problem.z_max(), settings.bracket_points,
                                      settings.golden_iters);
        }
        for (int k = 0; k < users; ++k) st.lambda[k] += tau * (st.x[k] - st.y[k]);

        const double l_now = problem.lagrangian(st.x, st.y, st.lambda, tau);
        st.lagrangian_trace.push_back(l_now);
        st.residual_trace.push_back(inf_norm_diff(st.x, st.y));

        const double f_y = problem.objective(st.y);
        if (f_y < result.best_objective) {
            result.best_objective = f_y;
            result.best_y = st.y;
        }
        if (std::abs(l_now - l_prev) <= settings.tol_inner) {
            result.converged = true;
            break;
        }
        l_prev = l_now;
    }
    result.lagrangian = st.lagrangian_trace.empty() ? l_prev : st.lagrangian_trace.back();
    result.residual_inf = st.residual_trace.empty() ? 0.0 : st.residual_trace.back();
    return result;
}

BlocklengthMatrix default_initial_blocklengths(const SystemConfig& cfg) {
    return BlocklengthMatrix::from_tti(cfg.k_users, cfg.blocks(), cfg.w_hz, cfg.optimizer.n0_tti_ms * 1e-3);
}

AoResult alternating_optimize(const SystemConfig& cfg, const BlocklengthMatrix& n0) {
    if (n0.users() != cfg.k_users || n0.blocks() != cfg.blocks()) {
        throw std::invalid_argument("alternating_optimize: initial matrix has the wrong shape");
    }
    for (double v : n0.values()) {
        if (!(v > 0.0)) throw std::invalid_argument("alternating_optimize: initial blocklengths must be > 0");
    }
    const OptimizerSettings& opt = cfg.optimizer;
    const DelayModel model(cfg);

    AoResult res;
    BlocklengthMatrix current = n0;
    double objective = penalized_objective(current, cfg, opt.omega);
    res.initial_objective_s = objective;
    double previous_outer = objective;

    for (int t = 1; t <= opt.outer_cap; ++t) {
        for (int q = 0; q < cfg.blocks(); ++q) {
            const BlockProblem problem(model, cfg, current, q);
            const auto start = opt.warm_start ? current.column(q) : n0.column(q);
            BlockResult block = admm_block_solve(problem, start, opt);
            block.state.outer_iter = t;

            BlocklengthMatrix candidate = current;
            candidate.set_column(q, problem.to_symbols(block.best_y));
            const double candidate_objective = penalized_objective(candidate, cfg, opt.omega);
            // Accept only non-worsening block updates; this keeps the trace monotone.
            const bool accept = candidate_objective <= objective;
            if (accept) {
                current = std::move(candidate);
                objective = candidate_objective;
            }

            TraceRecord rec;
            rec.outer_iter = t;
            rec.block = q;
            rec.inner_iters = block.state.inner_iter;
            rec.lagrangian = block.lagrangian;
            rec.objective_s = objective;
            rec.max_violation_bits = max_violation(current, cfg);
            rec.residual_inf = block.residual_inf;
            rec.inner_converged = block.converged;
            rec.accepted = accept;
            res.records.push_back(rec);
        }

        if (!std::isfinite(objective)) {
            throw NumericalFailure("alternating_optimize: objective is not finite after a full sweep");
        }
        if (!res.objective_trace.empty()) {
            const double prev = res.objective_trace.back();
            if (objective > prev + 1e-6 * (1.0 + std::abs(prev))) {
                throw NumericalFailure("alternating_optimize: accepted objective increased from " +
                                       std::to_string(prev) + " to " + std::to_string(objective));
            }
        }
        res.objective_trace.push_back(objective);
        res.outer_iters = t;
        if (std::abs(previous_outer - objective) <= opt.tol_outer) {
            res.converged = true;
            break;
        }
        previous_outer = objective;
    }
    res.hit_outer_cap = !res.converged;

    res.n = current;
    res.n_rounded = current.rounded();
    res.objective_s = objective;
    res.unpenalized_s = model.evaluate(current).average_access_ms * 1e-3;
    res.rounded_objective_s = penalized_objective(res.n_rounded, cfg, opt.omega);
    return res;
}

std::string trace_csv(const AoResult& result) {
    std::ostringstream out;
    out << "outer_iter,block,inner_iters,lagrangian,objective_ms,max_violation_bits,residual_inf,"
           "inner_converged,accepted\n";
    char buf[256];
    for (const auto& r : result.records) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.10g,%.10g,%.6g,%.6g,%d,%d\n", r.outer_iter, r.block,
                      r.inner_iters, r.lagrangian, r.objective_s * 1e3, r.max_violation_bits, r.residual_inf,
                      r.inner_converged ? 1 : 0, r.accepted ? 1 : 0);
        out << buf;
    }
    return out.str();
}

}  // namespace gfab
