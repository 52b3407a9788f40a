#pragma once

// Blocklength optimisation: penalised delay objective, per-packet-index
// augmented-Lagrangian splitting and the alternating outer loop.
//
// Block q collects column q of the blocklength matrix (one entry per user).
// Inside a block the variables are normalised by the symbols of a 1 ms TTI
// and the objective is expressed in milliseconds summed over users, so that
// tau and tol_inner are independent of bandwidth and user count.
//
// The block objective F(z) = sum_k f_k(z_k) is split as F = u + v with
//   u(x) = sum_k c_k x_k, c_k the marginal cost of transmission time in
//          column q with E[X] and pi frozen at the block's entry point,
//   v(y) = F(y) - u(y), which carries the success probabilities, the
//          stationary distribution and the rate penalty.
// u is linear, so the x-update is a projected closed form.

#include <span>
#include <string>
#include <vector>

#include "gfab/blocklength.hpp"
#include "gfab/config.hpp"
#include "gfab/delay_model.hpp"

namespace gfab {

/// Raised when the accepted objective of the outer loop increases.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// R(n) * n in bits at the mean SNR, with eps chosen per OptimizerSettings.
double deliverable_bits(double n, const SystemConfig& cfg);

/// sum_q R(n_q) n_q - B sum_{a<=Q_th} a pmf(a); positive when the row can carry its load.
double rate_constraint_slack(std::span<const double> n_row, const SystemConfig& cfg);

/// Average access delay (s) plus omega * sum_k min(slack_k, 0)^2.
/// Returns +infinity when a success probability is zero.
double penalized_objective(const BlocklengthMatrix& n, const SystemConfig& cfg, double omega);

/// The q-th block subproblem with every other column held fixed.
class BlockProblem {
public:
    BlockProblem(const DelayModel& model, const SystemConfig& cfg, const BlocklengthMatrix& current, int q);

    int block() const { return q_; }
    int users() const { return static_cast<int>(rows_.size()); }
    double n_scale() const { return n_scale_; }
    double z_min() const { return z_min_; }
    double z_max() const { return z_max_; }
    const std::vector<double>& u_coefficients() const { return c_; }

    /// f_k at normalised blocklength z (user k's share of the block objective).
    double user_objective(int k, double z) const;
    double objective(std::span<const double> z) const;

    double u(std::span<const double> x) const;
    double v(std::span<const double> y) const;
    double v_user(int k, double z) const { return user_objective(k, z) - c_[k] * z; }

    /// u(x) + v(y) + lambda^T (x - y) + tau/2 ||x - y||^2.
    double lagrangian(std::span<const double> x, std::span<const double> y, std::span<const double> lambda,
                      double tau) const;

    std::vector<double> to_scaled(std::span<const double> n) const;
    std::vector<double> to_symbols(std::span<const double> z) const;

private:
    struct RowCache {
        std::vector<double> tti;
        std::vector<double> p_suc;
        double fixed_bits = 0.0;  // deliverable bits of the other columns
    };

    const DelayModel& model_;
    const SystemConfig& cfg_;
    int q_;
    double n_scale_;
    double z_min_;
    double z_max_;
    double demand_bits_;
    std::vector<RowCache> rows_;
    std::vector<double> c_;
};

/// Iterates of one block solve. x and y are in the block's normalised units.
struct OptimizerState {
    int outer_iter = 0;
    int block = 0;
    int inner_iter = 0;
    double tau = 1.0;
    double omega = 1.0;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lambda;
    std::vector<double> lagrangian_trace;  // one entry per inner iteration
    std::vector<double> residual_trace;    // ||x - y||_inf per inner iteration
};

struct BlockResult {
    OptimizerState state;
    std::vector<double> best_y;  // lowest block objective seen, including the start point
    double best_objective = 0.0;
    bool converged = false;
    double residual_inf = 0.0;
    double lagrangian = 0.0;
};

/// x/y/lambda iterations on block q from the start column `start_symbols`.
/// Hitting the inner cap is reported through `converged`, not thrown.
BlockResult admm_block_solve(const BlockProblem& problem, std::span<const double> start_symbols,
                             const OptimizerSettings& settings);

struct TraceRecord {
    int outer_iter = 0;
    int block = 0;
    int inner_iters = 0;
    double lagrangian = 0.0;
    double objective_s = 0.0;       // accepted penalised objective after this block
    double max_violation_bits = 0.0;
    double residual_inf = 0.0;
    bool inner_converged = false;
    bool accepted = false;
};

struct AoResult {
    BlocklengthMatrix n;          // continuous optimum
    BlocklengthMatrix n_rounded;  // nearest positive integers
    double initial_objective_s = 0.0;
    std::vector<double> objective_trace;  // accepted objective after each outer iteration
    std::vector<TraceRecord> records;
    double objective_s = 0.0;          // penalised
    double unpenalized_s = 0.0;        // average access delay alone
    double rounded_objective_s = 0.0;  // penalised, at n_rounded
    int outer_iters = 0;
    bool converged = false;
    bool hit_outer_cap = false;
};

AoResult alternating_optimize(const SystemConfig& cfg, const BlocklengthMatrix& n0);

/// n0 = W * n0_tti everywhere.
BlocklengthMatrix default_initial_blocklengths(const SystemConfig& cfg);

std::string trace_csv(const AoResult& result);

}  // namespace gfab
