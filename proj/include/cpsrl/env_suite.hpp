#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpsrl/mdp.hpp"

namespace cpsrl {

/// RiverSwim chain. Action 0 swims left (always succeeds), action 1 swims
/// right: moves right with p_right, drifts back with p_back, otherwise stays.
/// At the right bank the right-move mass also stays. r_left is paid for
/// "left" in state 0 and r_right for "right" in state n-1. Starts in state 0.
struct RiverSwimParams {
    std::size_t n = 6;
    double p_right = 0.3;
    double p_back = 0.1;
    double r_left = 0.005;
    double r_right = 1.0;
};

TabularMdp make_river_swim(const RiverSwimParams& params = {});

/// Rows ~ Dirichlet(alpha 1); rewards uniform on an 11-point grid of [0,1].
/// Redraws until the MDP is communicating.
TabularMdp make_random_dirichlet(std::size_t n_states, std::size_t n_actions, double alpha,
                                 Rng& rng, std::size_t max_attempts = 1000);

/// Number of rejected draws in the most recent make_random_dirichlet call on
/// this thread.
std::size_t last_dirichlet_rejections();

/// Deterministic n-cycle; action 0 advances s -> s+1 mod n. With with_stay a
/// second action keeps the state. Reward of state s is rewards[s] for every
/// action.
TabularMdp make_cycle(std::size_t n, const std::vector<double>& rewards, bool with_stay = false);

enum class EnvKind { RiverSwim, RandomDirichlet, Cycle };

struct EnvSpec {
    EnvKind kind = EnvKind::RiverSwim;
    RiverSwimParams river_swim;
    std::size_t n_states = 5;
    std::size_t n_actions = 2;
    double alpha = 1.0;
    std::vector<double> cycle_rewards{0.0, 1.0};
    bool cycle_stay = false;
};

EnvKind parse_env_kind(const std::string& name);
std::string to_string(EnvKind kind);
std::string describe(const EnvSpec& spec);

/// Pure function of (spec, seed).
TabularMdp make_env(const EnvSpec& spec, std::uint64_t seed);

}  // namespace cpsrl
