#include "cpsrl/mdp.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cpsrl {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cumulative += probs[i];
        last_positive = i;
        if (u < cumulative) return i;
    }
    // rounding left u above the accumulated mass
    return last_positive;
}

namespace {

std::string fmt_index(const char* name, std::size_t v) {
    return std::string(name) + "=" + std::to_string(v);
}

void check_shapes(std::size_t n_states, std::size_t n_actions, std::size_t n_transitions,
                  std::size_t n_rewards) {
    if (n_states == 0) throw InvalidModel("n_states must be positive");
    if (n_actions == 0) throw InvalidModel("n_actions must be positive");
    if (n_transitions != n_actions * n_states * n_states)
        throw InvalidModel("transitions has length " + std::to_string(n_transitions) +
                           ", expected A*S*S = " +
                           std::to_string(n_actions * n_states * n_states));
    if (n_rewards != n_states * n_actions)
        throw InvalidModel("rewards has length " + std::to_string(n_rewards) +
                           ", expected S*A = " + std::to_string(n_states * n_actions));
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions,
                       std::vector<double> transitions, std::vector<double> rewards,
                       State initial_state)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      initial_state_(initial_state) {
    check_shapes(n_states_, n_actions_, transitions_.size(), rewards_.size());
    validate(*this);
}

TabularMdp TabularMdp::unchecked(std::size_t n_states, std::size_t n_actions,
                                 std::vector<double> transitions, std::vector<double> rewards,
                                 State initial_state) {
    check_shapes(n_states, n_actions, transitions.size(), rewards.size());
    TabularMdp mdp;
    mdp.n_states_ = n_states;
    mdp.n_actions_ = n_actions;
    mdp.transitions_ = std::move(transitions);
    mdp.rewards_ = std::move(rewards);
    mdp.initial_state_ = initial_state;
    return mdp;
}

Eigen::MatrixXd TabularMdp::action_matrix(Action a) const {
    Eigen::MatrixXd m(n_states_, n_states_);
    for (State s = 0; s < n_states_; ++s)
        for (State next = 0; next < n_states_; ++next) m(s, next) = transition(a, s, next);
    return m;
}

void validate(const TabularMdp& mdp) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    if (mdp.initial_state() >= S)
        throw InvalidModel("initial_state " + std::to_string(mdp.initial_state()) +
                           " out of range (n_states=" + std::to_string(S) + ")");
    for (Action a = 0; a < A; ++a) {
        for (State s = 0; s < S; ++s) {
            double sum = 0.0;
            for (State next = 0; next < S; ++next) {
                const double p = mdp.transition(a, s, next);
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    std::ostringstream msg;
                    msg << "negative or non-finite probability at (" << fmt_index("a", a) << ","
                        << fmt_index("s", s) << "," << fmt_index("s'", next) << "): " << p;
                    throw InvalidModel(msg.str());
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > TabularMdp::kRowTolerance) {
                std::ostringstream msg;
                msg.precision(13);
                msg << "row (" << fmt_index("a", a) << "," << fmt_index("s", s) << ") sums to "
                    << sum;
                throw InvalidModel(msg.str());
            }
        }
    }
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            const double r = mdp.reward(s, a);
            if (!(r >= 0.0 && r <= 1.0)) {
                std::ostringstream msg;
                msg << "reward out of [0,1] at (" << fmt_index("s", s) << ","
                    << fmt_index("a", a) << "): " << r;
                throw InvalidModel(msg.str());
            }
        }
    }
}

Policy::Policy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidModel("policy dimensions must be positive");
    if (probs_.size() != n_states_ * n_actions_)
        throw InvalidModel("policy has " + std::to_string(probs_.size()) + " entries, expected " +
                           std::to_string(n_states_ * n_actions_));
    for (State s = 0; s < n_states_; ++s) {
        double sum = 0.0;
        for (Action a = 0; a < n_actions_; ++a) {
            const double p = prob(s, a);
            if (!(p >= 0.0))
                throw InvalidModel("negative policy probability at (s=" + std::to_string(s) +
                                   ",a=" + std::to_string(a) + ")");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTolerance)
            throw InvalidModel("policy row s=" + std::to_string(s) + " sums to " +
                               std::to_string(sum));
    }
}

Policy Policy::deterministic(std::size_t n_actions, const std::vector<Action>& choice) {
    std::vector<double> probs(choice.size() * n_actions, 0.0);
    for (State s = 0; s < choice.size(); ++s) {
        if (choice[s] >= n_actions)
            throw InvalidModel("action " + std::to_string(choice[s]) + " out of range at s=" +
                               std::to_string(s));
        probs[s * n_actions + choice[s]] = 1.0;
    }
    return Policy(choice.size(), n_actions, std::move(probs));
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
    return Policy(n_states, n_actions,
                  std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions)));
}

Action Policy::deterministic_action(State s) const {
    for (Action a = 0; a < n_actions_; ++a)
        if (prob(s, a) == 1.0) return a;
    return n_actions_;
}

Action Policy::sample(State s, Rng& rng) const {
    const Action a = deterministic_action(s);
    if (a < n_actions_) return a;
    return sample_categorical(row(s), rng);
}

namespace {

void check_dimensions(const TabularMdp& mdp, const Policy& policy) {
    if (mdp.n_states() != policy.n_states() || mdp.n_actions() != policy.n_actions())
        throw std::invalid_argument(
            "dimension mismatch: mdp is " + std::to_string(mdp.n_states()) + "x" +
            std::to_string(mdp.n_actions()) + ", policy is " + std::to_string(policy.n_states()) +
            "x" + std::to_string(policy.n_actions()));
}

}  // namespace

Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
    check_dimensions(mdp, policy);
    const std::size_t S = mdp.n_states();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < mdp.n_actions(); ++a) {
            const double w = policy.prob(s, a);
            if (w == 0.0) continue;
            const auto row = mdp.transition_row(a, s);
            for (State next = 0; next < S; ++next) P(s, next) += w * row[next];
        }
    }
    return P;
}

Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const Policy& policy) {
    check_dimensions(mdp, policy);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(mdp.n_states());
    for (State s = 0; s < mdp.n_states(); ++s)
        for (Action a = 0; a < mdp.n_actions(); ++a) r(s) += policy.prob(s, a) * mdp.reward(s, a);
    return r;
}

StepResult step(const TabularMdp& mdp, State s, Action a, Rng& rng) {
    if (s >= mdp.n_states() || a >= mdp.n_actions())
        throw std::out_of_range("step: (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                ") out of range");
    return {sample_categorical(mdp.transition_row(a, s), rng), mdp.reward(s, a)};
}

bool check_communicating(const TabularMdp& mdp) {
    const std::size_t S = mdp.n_states();
    std::vector<std::vector<State>> forward(S), backward(S);
    for (State s = 0; s < S; ++s) {
        for (State next = 0; next < S; ++next) {
            for (Action a = 0; a < mdp.n_actions(); ++a) {
                if (mdp.transition(a, s, next) > 0.0) {
                    forward[s].push_back(next);
                    backward[next].push_back(s);
                    break;
                }
            }
        }
    }
    // strongly connected iff state 0 reaches everything in both the graph and its reverse
    auto reaches_all = [S](const std::vector<std::vector<State>>& adj) {
        std::vector<char> seen(S, 0);
        std::vector<State> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const State u = stack.back();
            stack.pop_back();
            for (State v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == S;
    };
    return reaches_all(forward) && reaches_all(backward);
}

std::string to_json(const TabularMdp& mdp) {
    nlohmann::ordered_json doc;
    doc["n_states"] = mdp.n_states();
    doc["n_actions"] = mdp.n_actions();
    doc["initial_state"] = mdp.initial_state();
    doc["transitions"] = mdp.transitions();
    doc["rewards"] = mdp.rewards();
    return doc.dump(2) + "\n";
}

TabularMdp mdp_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
        return TabularMdp(doc.at("n_states").get<std::size_t>(),
                          doc.at("n_actions").get<std::size_t>(),
                          doc.at("transitions").get<std::vector<double>>(),
                          doc.at("rewards").get<std::vector<double>>(),
                          doc.at("initial_state").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidModel(std::string("malformed MDP document: ") + e.what());
    }
}

}  // namespace cpsrl
