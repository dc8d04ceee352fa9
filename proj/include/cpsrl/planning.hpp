#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "cpsrl/mdp.hpp"

namespace cpsrl {

/// Discounted value of a policy (or the optimal one) for a single discount.
struct ValueReport {
    double gamma = 0.0;
    Eigen::VectorXd v;
    Policy policy;
    /// Sup-norm Bellman residual of the returned v.
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// Average-reward quantities of one policy.
struct GainReport {
    Eigen::VectorXd lambda_per_state;
    /// Set when lambda_per_state is constant across states (within 1e-9).
    std::optional<double> lambda_opt;
    /// max over s and T <= horizon_used of |sum_{t<T} (P^t r)(s) - T lambda(s)|.
    double tau_hat = 0.0;
    std::size_t horizon_used = 0;
};

/// An iterative method did not reach its tolerance within the iteration cap.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, Eigen::MatrixXd last_iterate)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}

    const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }

  private:
    Eigen::MatrixXd last_iterate_;
};

/// States up to this count are evaluated by a direct LU solve.
inline constexpr std::size_t kDirectSolveMaxStates = 500;

/// Default horizon of the partial-sum scan behind reward_averaging_time.
inline constexpr std::size_t kDefaultTauHorizon = 10'000;

/// V = r_pi + gamma P_pi V, to sup-norm residual tol.
ValueReport evaluate_discounted(const TabularMdp& mdp, const Policy& policy, double gamma,
                                double tol = 1e-10);

/// Value iteration from zero; stops once successive iterates are within
/// tol (1 - gamma) / (2 gamma), which puts v within tol of V*. The returned
/// policy is greedy on v with ties going to the lowest action index.
ValueReport solve_discounted(const TabularMdp& mdp, double gamma, double tol = 1e-8,
                             std::size_t max_iterations = 10'000'000);

/// Greedy deterministic policy for Q(s,a) = r(s,a) + gamma <P_a(s), v>.
Policy greedy_policy(const TabularMdp& mdp, const Eigen::VectorXd& v, double gamma);

/// Cesaro limiting matrix P* = lim (1/n) sum_{k<n} P^k. Throws ConvergenceError
/// carrying the last iterate if the limit is not resolved to tol.
Eigen::MatrixXd limiting_matrix(const Eigen::MatrixXd& P, double tol = 1e-13);

/// lambda_pi(s) for every start state.
Eigen::VectorXd average_reward(const TabularMdp& mdp, const Policy& policy, double tol = 1e-13);

/// Optimal gain by relative value iteration with span stopping. Requires a
/// weakly-communicating input; throws ConvergenceError otherwise.
double optimal_gain(const TabularMdp& mdp, double tol = 1e-10,
                    std::size_t max_iterations = 10'000'000);

/// Reward averaging time estimate from an exact partial-sum scan up to t_max.
/// lambda may be supplied when already computed.
GainReport reward_averaging_time(const TabularMdp& mdp, const Policy& policy, long long t_max,
                                 const std::optional<Eigen::VectorXd>& lambda = std::nullopt);

double span(const Eigen::VectorXd& v);

}  // namespace cpsrl
