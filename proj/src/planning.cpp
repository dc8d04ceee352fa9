#include "cpsrl/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cpsrl {

namespace {

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("discount must lie in [0,1), got " + std::to_string(gamma));
}

double sup_norm(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

// One Bellman optimality backup; writes max_a Q into out.
void bellman_max(const TabularMdp& mdp, const Eigen::VectorXd& v, double gamma,
                 Eigen::VectorXd& out) {
    const std::size_t S = mdp.n_states();
    const double* values = v.data();
    for (State s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (Action a = 0; a < mdp.n_actions(); ++a) {
            const auto row = mdp.transition_row(a, s);
            double expected = 0.0;
            for (State next = 0; next < S; ++next) expected += row[next] * values[next];
            best = std::max(best, mdp.reward(s, a) + gamma * expected);
        }
        out(s) = best;
    }
}

}  // namespace

ValueReport evaluate_discounted(const TabularMdp& mdp, const Policy& policy, double gamma,
                                double tol) {
    check_gamma(gamma);
    const Eigen::MatrixXd P = policy_transition_matrix(mdp, policy);
    const Eigen::VectorXd r = policy_reward_vector(mdp, policy);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());

    ValueReport report{gamma, r, policy, 0.0, 0};
    if (gamma == 0.0) return report;

    if (mdp.n_states() <= kDirectSolveMaxStates) {
        const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * P;
        Eigen::VectorXd v = system.partialPivLu().solve(r);
        const double residual = sup_norm(v - (r + gamma * P * v));
        if (std::isfinite(residual) && residual <= tol) {
            report.v = std::move(v);
            report.residual = residual;
            report.iterations = 1;
            return report;
        }
        // fall through to fixed-point iteration
    }

    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    for (std::size_t it = 1;; ++it) {
        Eigen::VectorXd next = r + gamma * P * v;
        const double residual = sup_norm(next - v);
        v = std::move(next);
        if (residual * gamma <= tol) {
            report.v = std::move(v);
            report.residual = residual * gamma;
            report.iterations = it;
            return report;
        }
    }
}

Policy greedy_policy(const TabularMdp& mdp, const Eigen::VectorXd& v, double gamma) {
    const std::size_t S = mdp.n_states();
    std::vector<Action> choice(S, 0);
    for (State s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (Action a = 0; a < mdp.n_actions(); ++a) {
            const auto row = mdp.transition_row(a, s);
            double expected = 0.0;
            for (State next = 0; next < S; ++next) expected += row[next] * v(next);
            const double q = mdp.reward(s, a) + gamma * expected;
            if (q > best) {
                best = q;
                choice[s] = a;
            }
        }
    }
    return Policy::deterministic(mdp.n_actions(), choice);
}

ValueReport solve_discounted(const TabularMdp& mdp, double gamma, double tol,
                             std::size_t max_iterations) {
    check_gamma(gamma);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd next(S);

    if (gamma == 0.0) {
        bellman_max(mdp, v, 0.0, next);
        return {gamma, next, greedy_policy(mdp, next, 0.0), 0.0, 1};
    }

    const double threshold = tol * (1.0 - gamma) / (2.0 * gamma);
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        bellman_max(mdp, v, gamma, next);
        const double change = sup_norm(next - v);
        v.swap(next);
        if (change <= threshold) return {gamma, v, greedy_policy(mdp, v, gamma), change, it};
    }
    throw ConvergenceError("value iteration did not reach tolerance in " +
                               std::to_string(max_iterations) + " iterations",
                           v);
}

// Cesaro averages over a doubling window: W_0 = (I + P)/2 averages P^0 and
// P^1, and W_{j+1} = W_j^2 averages P^k with binomial weights over a window of
// length 2^{j+1}. Every such average shares the Cesaro limit, and each
// eigenvalue mu != 1 of P maps to |(1 + mu)/2| < 1, so periodic chains
// converge as well.
Eigen::MatrixXd limiting_matrix(const Eigen::MatrixXd& P, double tol) {
    constexpr int kMaxDoublings = 80;
    const Eigen::Index S = P.rows();
    Eigen::MatrixXd W = 0.5 * (Eigen::MatrixXd::Identity(S, S) + P);
    for (int j = 0; j < kMaxDoublings; ++j) {
        Eigen::MatrixXd next = W * W;
        const double change = (next - W).cwiseAbs().rowwise().sum().maxCoeff();
        W = std::move(next);
        if (change < tol) return W;
    }
    throw ConvergenceError("Cesaro average did not converge after " +
                               std::to_string(kMaxDoublings) + " window doublings",
                           W);
}

Eigen::VectorXd average_reward(const TabularMdp& mdp, const Policy& policy, double tol) {
    const Eigen::MatrixXd P = policy_transition_matrix(mdp, policy);
    const Eigen::VectorXd r = policy_reward_vector(mdp, policy);
    Eigen::VectorXd lambda = limiting_matrix(P, tol) * r;
    return lambda.cwiseMax(0.0).cwiseMin(1.0);
}

double optimal_gain(const TabularMdp& mdp, double tol, std::size_t max_iterations) {
    // Relative value iteration on the lazy chain (half self-loop), which has
    // the same optimal gain and is aperiodic.
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    Eigen::VectorXd h = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd next(S);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        bellman_max(mdp, h, 0.5, next);
        next += 0.5 * h;
        const Eigen::VectorXd diff = next - h;
        const double lo = diff.minCoeff();
        const double hi = diff.maxCoeff();
        h = next.array() - next(0);
        if (hi - lo < tol) return std::clamp(0.5 * (lo + hi), 0.0, 1.0);
    }
    throw ConvergenceError("relative value iteration span did not contract below tolerance",
                           h);
}

GainReport reward_averaging_time(const TabularMdp& mdp, const Policy& policy, long long t_max,
                                 const std::optional<Eigen::VectorXd>& lambda) {
    if (t_max < 0) throw std::invalid_argument("t_max must be nonnegative");
    const Eigen::MatrixXd P = policy_transition_matrix(mdp, policy);
    const Eigen::VectorXd r = policy_reward_vector(mdp, policy);

    GainReport report;
    report.lambda_per_state = lambda ? *lambda : average_reward(mdp, policy);
    report.horizon_used = static_cast<std::size_t>(t_max);
    if (span(report.lambda_per_state) < 1e-9) report.lambda_opt = report.lambda_per_state.mean();

    // deviation_T = sum_{t<T} (P^t r - lambda); propagated as P^t r
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    Eigen::VectorXd expected = r;
    Eigen::VectorXd deviation = Eigen::VectorXd::Zero(S);
    double tau = 0.0;
    for (long long T = 1; T <= t_max; ++T) {
        deviation += expected - report.lambda_per_state;
        tau = std::max(tau, sup_norm(deviation));
        expected = P * expected;
    }
    report.tau_hat = tau;
    return report;
}

double span(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw std::invalid_argument("span of an empty vector");
    return v.maxCoeff() - v.minCoeff();
}

}  // namespace cpsrl
