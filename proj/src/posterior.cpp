#include "cpsrl/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace cpsrl {

PosteriorState::PosteriorState(std::size_t n_states, std::size_t n_actions, double prior_alpha)
    : PosteriorState(n_states, n_actions,
                     std::vector<double>(n_states * n_actions * n_states, prior_alpha)) {}

PosteriorState::PosteriorState(std::size_t n_states, std::size_t n_actions,
                               std::vector<double> prior_alpha)
    : n_states_(n_states),
      n_actions_(n_actions),
      visits_(n_states * n_actions, 0),
      counts_(n_states * n_actions * n_states, 0),
      alpha_(std::move(prior_alpha)) {
    if (n_states == 0 || n_actions == 0)
        throw std::invalid_argument("posterior dimensions must be positive");
    if (alpha_.size() != counts_.size())
        throw std::invalid_argument("prior_alpha must have S*A*S entries");
    for (double a : alpha_)
        if (!(a > 0.0)) throw std::invalid_argument("Dirichlet prior parameters must be positive");
}

void PosteriorState::update(State s, Action a, State next) {
    if (s >= n_states_ || a >= n_actions_ || next >= n_states_)
        throw std::out_of_range("posterior update (" + std::to_string(s) + "," +
                                std::to_string(a) + "," + std::to_string(next) +
                                ") out of range");
    ++counts_[(s * n_actions_ + a) * n_states_ + next];
    ++visits_[s * n_actions_ + a];
    ++total_steps_;
}

TabularMdp sample_mdp(const PosteriorState& post, const std::vector<double>& rewards, Rng& rng,
                      State initial_state) {
    const std::size_t S = post.n_states();
    const std::size_t A = post.n_actions();
    std::vector<double> transitions(A * S * S);
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            double* row = transitions.data() + (a * S + s) * S;
            double total = 0.0;
            for (State next = 0; next < S; ++next) {
                const double shape = post.prior_alpha(s, a, next) +
                                     static_cast<double>(post.transition_count(s, a, next));
                std::gamma_distribution<double> draw(shape, 1.0);
                row[next] = draw(rng);
                total += row[next];
            }
            if (total > 0.0) {
                for (State next = 0; next < S; ++next) row[next] /= total;
            } else {
                // every gamma draw underflowed (tiny shapes): fall back to the mode of the
                // largest shape
                std::size_t best = 0;
                for (State next = 1; next < S; ++next)
                    if (post.prior_alpha(s, a, next) + post.transition_count(s, a, next) >
                        post.prior_alpha(s, a, best) + post.transition_count(s, a, best))
                        best = next;
                row[best] = 1.0;
            }
        }
    }
    return TabularMdp::unchecked(S, A, std::move(transitions), rewards, initial_state);
}

TabularMdp empirical_mdp(const PosteriorState& post, const std::vector<double>& rewards, Rng& rng,
                         State initial_state) {
    const std::size_t S = post.n_states();
    const std::size_t A = post.n_actions();
    std::vector<double> transitions(A * S * S, 0.0);
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            double* row = transitions.data() + (a * S + s) * S;
            const std::uint64_t n = post.visit_count(s, a);
            if (n == 0) {
                row[rng() % S] = 1.0;
                continue;
            }
            for (State next = 0; next < S; ++next)
                row[next] = static_cast<double>(post.transition_count(s, a, next)) /
                            static_cast<double>(n);
        }
    }
    return TabularMdp::unchecked(S, A, std::move(transitions), rewards, initial_state);
}

double confidence_radius(const PosteriorState& post, State s, Action a, std::uint64_t big_k,
                         std::uint64_t t_k) {
    const double S = static_cast<double>(post.n_states());
    const double A = static_cast<double>(post.n_actions());
    const double n = std::max<double>(static_cast<double>(post.visit_count(s, a)), 1.0);
    return std::sqrt(14.0 * S *
                     std::log(2.0 * S * A * static_cast<double>(big_k) *
                              static_cast<double>(t_k)) /
                     n);
}

ConfidenceSet make_confidence_set(const PosteriorState& post, const std::vector<double>& rewards,
                                  std::uint64_t k, std::uint64_t t_k, std::uint64_t big_k,
                                  Rng& rng) {
    std::vector<double> radii(post.n_states() * post.n_actions());
    for (State s = 0; s < post.n_states(); ++s)
        for (Action a = 0; a < post.n_actions(); ++a)
            radii[s * post.n_actions() + a] = confidence_radius(post, s, a, big_k, t_k);
    return {std::move(radii), empirical_mdp(post, rewards, rng), k, t_k, big_k};
}

bool in_confidence_set(const TabularMdp& candidate, const ConfidenceSet& conf) {
    const TabularMdp& center = conf.center;
    if (candidate.n_states() != center.n_states() || candidate.n_actions() != center.n_actions())
        throw std::invalid_argument("in_confidence_set: dimension mismatch");
    for (State s = 0; s < center.n_states(); ++s) {
        for (Action a = 0; a < center.n_actions(); ++a) {
            const auto p = candidate.transition_row(a, s);
            const auto q = center.transition_row(a, s);
            double l1 = 0.0;
            for (State next = 0; next < center.n_states(); ++next) l1 += std::abs(p[next] - q[next]);
            if (l1 > conf.radius(s, a)) return false;
        }
    }
    return true;
}

std::uint64_t planned_episode_count(double gamma, std::uint64_t horizon) {
    const double expected = (1.0 - gamma) * static_cast<double>(horizon);
    // round-off in 1 - gamma must not push an integral product up by one
    return static_cast<std::uint64_t>(std::ceil(expected * (1.0 - 1e-12))) + 1;
}

}  // namespace cpsrl
