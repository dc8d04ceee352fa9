#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cpsrl/mdp.hpp"

namespace cpsrl {

/// Transition counts plus an independent Dirichlet prior per (s, a).
class PosteriorState {
  public:
    PosteriorState(std::size_t n_states, std::size_t n_actions, double prior_alpha = 1.0);
    /// Prior pseudo-counts indexed (s, a, s').
    PosteriorState(std::size_t n_states, std::size_t n_actions, std::vector<double> prior_alpha);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }

    void update(State s, Action a, State next);

    std::uint64_t visit_count(State s, Action a) const { return visits_[s * n_actions_ + a]; }
    std::uint64_t transition_count(State s, Action a, State next) const {
        return counts_[(s * n_actions_ + a) * n_states_ + next];
    }
    double prior_alpha(State s, Action a, State next) const {
        return alpha_[(s * n_actions_ + a) * n_states_ + next];
    }
    std::uint64_t total_steps() const { return total_steps_; }

    const std::vector<std::uint64_t>& visit_counts() const { return visits_; }
    const std::vector<std::uint64_t>& transition_counts() const { return counts_; }

    bool operator==(const PosteriorState&) const = default;

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<std::uint64_t> visits_;
    std::vector<std::uint64_t> counts_;
    std::vector<double> alpha_;
    std::uint64_t total_steps_ = 0;
};

/// Draws every transition row from Dirichlet(alpha + counts); rewards copied.
TabularMdp sample_mdp(const PosteriorState& post, const std::vector<double>& rewards, Rng& rng,
                      State initial_state = 0);

/// Count ratios for visited pairs; a one-hot row at a uniformly drawn
/// successor for unvisited ones.
TabularMdp empirical_mdp(const PosteriorState& post, const std::vector<double>& rewards, Rng& rng,
                         State initial_state = 0);

/// sqrt(14 S log(2 S A K t_k) / max(N(s,a), 1)).
double confidence_radius(const PosteriorState& post, State s, Action a, std::uint64_t big_k,
                         std::uint64_t t_k);

/// Per-(s,a) L1 balls around the empirical model at the start of an episode.
struct ConfidenceSet {
    std::vector<double> radii;  // (s, a)
    TabularMdp center;
    std::uint64_t k = 1;
    std::uint64_t t_k = 1;
    std::uint64_t big_k = 1;

    double radius(State s, Action a) const { return radii[s * center.n_actions() + a]; }
};

ConfidenceSet make_confidence_set(const PosteriorState& post, const std::vector<double>& rewards,
                                  std::uint64_t k, std::uint64_t t_k, std::uint64_t big_k,
                                  Rng& rng);

bool in_confidence_set(const TabularMdp& candidate, const ConfidenceSet& conf);

/// Episode-count estimate ceil((1 - gamma) T) + 1 used for K inside the radius.
std::uint64_t planned_episode_count(double gamma, std::uint64_t horizon);

}  // namespace cpsrl
