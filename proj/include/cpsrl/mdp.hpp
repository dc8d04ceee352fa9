#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cpsrl {

using State = std::size_t;
using Action = std::size_t;

/// Random source used everywhere in the workbench. Fixed engine type so that
/// seeded runs are bit-reproducible.
using Rng = std::mt19937_64;

/// Builds an Rng from a seed and a stream id, so that independent consumers
/// (environment, agent, diagnostics) never share a stream.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform double in [0, 1) drawn with a fixed, implementation-independent
/// recipe (53 high bits of one engine output).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Draws an index from a discrete distribution by inverse CDF.
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

/// Raised when a model or policy violates its invariants.
class InvalidModel : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Tabular MDP with a known deterministic reward function.
///
/// Transitions are stored densely, indexed (a, s, s'); rewards are indexed
/// (s, a). Rows are validated on construction.
class TabularMdp {
  public:
    static constexpr double kRowTolerance = 1e-12;

    TabularMdp(std::size_t n_states, std::size_t n_actions, std::vector<double> transitions,
               std::vector<double> rewards, State initial_state = 0);

    /// Skips validation; used by samplers whose rows are correct by construction.
    static TabularMdp unchecked(std::size_t n_states, std::size_t n_actions,
                                std::vector<double> transitions, std::vector<double> rewards,
                                State initial_state = 0);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    State initial_state() const { return initial_state_; }

    double transition(Action a, State s, State next) const {
        return transitions_[(a * n_states_ + s) * n_states_ + next];
    }
    double reward(State s, Action a) const { return rewards_[s * n_actions_ + a]; }

    std::span<const double> transition_row(Action a, State s) const {
        return {transitions_.data() + (a * n_states_ + s) * n_states_, n_states_};
    }

    const std::vector<double>& transitions() const { return transitions_; }
    const std::vector<double>& rewards() const { return rewards_; }

    /// Dense S x S matrix P_a.
    Eigen::MatrixXd action_matrix(Action a) const;

    bool operator==(const TabularMdp&) const = default;

  private:
    TabularMdp() = default;

    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<double> transitions_;
    std::vector<double> rewards_;
    State initial_state_ = 0;
};

/// Stochastic stationary policy, pi(a|s) stored row-major (s, a).
class Policy {
  public:
    static constexpr double kRowTolerance = 1e-12;

    Policy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

    static Policy deterministic(std::size_t n_actions, const std::vector<Action>& choice);
    static Policy uniform(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }

    double prob(State s, Action a) const { return probs_[s * n_actions_ + a]; }
    std::span<const double> row(State s) const {
        return {probs_.data() + s * n_actions_, n_actions_};
    }

    /// The action played with probability one at s, or n_actions() if the row
    /// is mixed.
    Action deterministic_action(State s) const;

    Action sample(State s, Rng& rng) const;

    bool operator==(const Policy&) const = default;

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> probs_;
};

/// Throws InvalidModel naming the first violated invariant.
void validate(const TabularMdp& mdp);

/// P_pi[s][s'] = sum_a pi(a|s) P_a[s][s'].
Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const Policy& policy);

/// r_pi[s] = sum_a pi(a|s) r(s, a).
Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const Policy& policy);

struct StepResult {
    State next_state;
    double reward;
};

StepResult step(const TabularMdp& mdp, State s, Action a, Rng& rng);

/// True iff the support graph (edge s -> s' when some action reaches s' with
/// positive probability) is strongly connected. Sufficient for weak
/// communication.
bool check_communicating(const TabularMdp& mdp);

/// JSON document with fields n_states, n_actions, initial_state, transitions
/// (flat, (a, s, s') row-major) and rewards (flat, (s, a) row-major).
std::string to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const std::string& text);

}  // namespace cpsrl
