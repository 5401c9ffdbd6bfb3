#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace skyirr {

// ---------------------------------------------------------------------------
// Stochastic gradient descent with Nesterov momentum (lookahead form):
//   g = grad(params + momentum * velocity)
//   velocity = momentum * velocity - learning_rate * g
//   params  += velocity
// ---------------------------------------------------------------------------

struct SgdNesterovState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::vector<double> velocity; // zero-initialized on first step when empty
};

using GradientFn = std::function<std::vector<double>(std::span<const double> params)>;

void sgd_nesterov_step(SgdNesterovState& state, std::vector<double>& params, const GradientFn& grad_fn);

// ---------------------------------------------------------------------------
// Limited-memory BFGS with two-loop recursion and an Armijo line search that
// backtracks from step 1, or stretches a passing full step while it keeps improving.
// ---------------------------------------------------------------------------

struct LbfgsConfig {
    std::size_t memory = 10;
    std::size_t max_iters = 500;
    double grad_tol = 1e-6;     // stop when max |grad_i| < grad_tol
    double c1 = 1e-4;           // Armijo sufficient-decrease constant
    double backtrack = 0.5;     // step shrink factor
    std::size_t max_backtracks = 60;
    std::size_t max_expansions = 30; // doublings tried after a full step passes
    double curvature_eps = 1e-10; // pairs with s'y <= eps are skipped
};

struct CurvaturePair {
    std::vector<double> s; // x_{k+1} - x_k
    std::vector<double> y; // g_{k+1} - g_k
    double sy = 0.0;
};

struct LbfgsState {
    LbfgsConfig config;
    std::deque<CurvaturePair> history;

    // Stores the pair when the curvature condition holds; oldest pair is
    // evicted beyond config.memory. Returns whether the pair was kept.
    bool push(std::vector<double> s, std::vector<double> y);
};

// Returns -H g where H is the implicit inverse-Hessian approximation,
// scaled initially by s'y / y'y of the newest pair (identity when empty).
std::vector<double> two_loop_direction(const std::deque<CurvaturePair>& history, std::span<const double> grad);

// Objective writes the gradient into `grad` and returns the value.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailure };

struct LbfgsResult {
    std::vector<double> params;
    double value = 0.0;
    double grad_inf_norm = 0.0;
    std::size_t iterations = 0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    std::vector<double> values; // objective at init, then after each accepted step
};

// Never throws on line-search stalls; reports them through status.
LbfgsResult lbfgs_run(const Objective& objective, std::vector<double> init, const LbfgsConfig& config = {});

// As lbfgs_run, but a line-search stall raises LineSearchFailure.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> init, const LbfgsConfig& config = {});

} // namespace skyirr
