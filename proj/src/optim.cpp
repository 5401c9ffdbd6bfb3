#include "skyirr/optim.hpp"

#include "skyirr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace skyirr {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(std::span<const double> v)
{
    double m = 0.0;
    for (const double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

void sgd_nesterov_step(SgdNesterovState& state, std::vector<double>& params, const GradientFn& grad_fn)
{
    if (state.velocity.empty()) {
        state.velocity.assign(params.size(), 0.0);
    }
    if (state.velocity.size() != params.size()) {
        throw Error(Errc::DimensionMismatch, "velocity and parameter sizes differ");
    }
    std::vector<double> lookahead(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        lookahead[i] = params[i] + state.momentum * state.velocity[i];
    }
    const std::vector<double> g = grad_fn(lookahead);
    if (g.size() != params.size()) {
        throw Error(Errc::DimensionMismatch, "gradient and parameter sizes differ");
    }
    if (!all_finite(g)) {
        throw Error(Errc::NonFiniteGradient, "gradient contains NaN or infinity");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i] = state.momentum * state.velocity[i] - state.learning_rate * g[i];
        params[i] = params[i] + state.velocity[i];
    }
}

bool LbfgsState::push(std::vector<double> s, std::vector<double> y)
{
    const double sy = dot(s, y);
    if (!(sy > config.curvature_eps)) {
        return false;
    }
    history.push_back({std::move(s), std::move(y), sy});
    while (history.size() > std::max<std::size_t>(1, config.memory)) {
        history.pop_front();
    }
    return true;
}

std::vector<double> two_loop_direction(const std::deque<CurvaturePair>& history, std::span<const double> grad)
{
    std::vector<double> q(grad.begin(), grad.end());
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
        const CurvaturePair& p = history[i];
        alpha[i] = dot(p.s, q) / p.sy;
        for (std::size_t j = 0; j < q.size(); ++j) {
            q[j] -= alpha[i] * p.y[j];
        }
    }
    double gamma = 1.0;
    if (!history.empty()) {
        const CurvaturePair& newest = history.back();
        gamma = newest.sy / dot(newest.y, newest.y);
    }
    for (double& v : q) {
        v *= gamma;
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
        const CurvaturePair& p = history[i];
        const double beta = dot(p.y, q) / p.sy;
        for (std::size_t j = 0; j < q.size(); ++j) {
            q[j] += (alpha[i] - beta) * p.s[j];
        }
    }
    for (double& v : q) {
        v = -v;
    }
    return q;
}

namespace {

double evaluate_step(const Objective& objective, std::span<const double> x, std::span<const double> dir, double step,
                     std::vector<double>& out, std::vector<double>& out_grad)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] + step * dir[i];
    }
    return objective(out, out_grad);
}

// Sufficient decrease plus a strict drop, with finite value and gradient.
bool armijo_holds(double value, std::span<const double> grad, double base, double decrease)
{
    return std::isfinite(value) && all_finite(grad) && value <= base + decrease && value < base;
}

} // namespace

LbfgsResult lbfgs_run(const Objective& objective, std::vector<double> init, const LbfgsConfig& config)
{
    const std::size_t n = init.size();
    LbfgsState state{config, {}};
    LbfgsResult result;
    result.params = std::move(init);
    std::vector<double> grad(n);
    result.value = objective(result.params, grad);
    if (!std::isfinite(result.value) || !all_finite(grad)) {
        throw Error(Errc::NonFiniteObjective, "objective is not finite at the initial point");
    }
    result.values.push_back(result.value);

    std::vector<double> trial(n);
    std::vector<double> trial_grad(n);
    std::vector<double> probe(n);
    std::vector<double> probe_grad(n);
    result.status = LbfgsStatus::MaxIterations;
    while (true) {
        result.grad_inf_norm = inf_norm(grad);
        if (result.grad_inf_norm < config.grad_tol) {
            result.status = LbfgsStatus::Converged;
            break;
        }
        if (result.iterations >= config.max_iters) {
            break;
        }

        bool accepted = false;
        double trial_value = 0.0;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            std::vector<double> dir = two_loop_direction(state.history, grad);
            double slope = dot(grad, dir);
            if (!(slope < 0.0)) {
                state.history.clear();
                dir = two_loop_direction(state.history, grad);
                slope = dot(grad, dir);
            }
            double step = 1.0;
            for (std::size_t b = 0; b <= config.max_backtracks; ++b, step *= config.backtrack) {
                trial_value = evaluate_step(objective, result.params, dir, step, trial, trial_grad);
                if (armijo_holds(trial_value, trial_grad, result.value, config.c1 * step * slope)) {
                    accepted = true;
                    break;
                }
            }
            // A full step passed: keep stretching it while Armijo holds and the value still drops.
            if (accepted && step == 1.0) {
                for (std::size_t e = 0; e < config.max_expansions; ++e) {
                    const double longer = step / config.backtrack;
                    const double value = evaluate_step(objective, result.params, dir, longer, probe, probe_grad);
                    if (!armijo_holds(value, probe_grad, result.value, config.c1 * longer * slope) ||
                        !(value < trial_value)) {
                        break;
                    }
                    step = longer;
                    trial_value = value;
                    trial.swap(probe);
                    trial_grad.swap(probe_grad);
                }
            }
            if (!accepted && state.history.empty()) {
                break;
            }
            // Retry once from steepest descent with a fresh history.
            if (!accepted) {
                state.history.clear();
            }
        }
        if (!accepted) {
            result.status = LbfgsStatus::LineSearchFailure;
            break;
        }

        std::vector<double> s(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial[i] - result.params[i];
            y[i] = trial_grad[i] - grad[i];
        }
        state.push(std::move(s), std::move(y));
        result.params.swap(trial);
        grad.swap(trial_grad);
        result.value = trial_value;
        result.values.push_back(trial_value);
        ++result.iterations;
    }
    result.grad_inf_norm = inf_norm(grad);
    return result;
}

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> init, const LbfgsConfig& config)
{
    LbfgsResult result = lbfgs_run(objective, std::move(init), config);
    if (result.status == LbfgsStatus::LineSearchFailure) {
        throw Error(Errc::LineSearchFailure, "no step satisfied the Armijo condition after " +
                                                 std::to_string(config.max_backtracks) + " backtracks");
    }
    return result;
}

} // namespace skyirr
