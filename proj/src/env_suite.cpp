#include "cpsrl/env_suite.hpp"

#include <random>
#include <stdexcept>

namespace cpsrl {

namespace {

thread_local std::size_t g_last_rejections = 0;

constexpr std::uint64_t kEnvStream = 0x656e76;  // "env"

}  // namespace

TabularMdp make_river_swim(const RiverSwimParams& p) {
    if (p.n < 2) throw std::invalid_argument("RiverSwim needs at least 2 states");
    if (!(p.p_right >= 0.0 && p.p_back >= 0.0 && p.p_right + p.p_back <= 1.0))
        throw std::invalid_argument("RiverSwim probabilities must be nonnegative and sum to <= 1");
    if (!(p.r_left >= 0.0 && p.r_left <= 1.0 && p.r_right >= 0.0 && p.r_right <= 1.0))
        throw std::invalid_argument("RiverSwim rewards must lie in [0,1]");

    const std::size_t S = p.n;
    constexpr std::size_t A = 2;
    std::vector<double> P(A * S * S, 0.0);
    auto at = [&](Action a, State s, State next) -> double& { return P[(a * S + s) * S + next]; };

    for (State s = 0; s < S; ++s) {
        at(0, s, s == 0 ? 0 : s - 1) = 1.0;

        const double stay = 1.0 - p.p_right - p.p_back;
        if (s == 0) {
            at(1, s, 1) += p.p_right;
            at(1, s, 0) += 1.0 - p.p_right;
        } else if (s == S - 1) {
            at(1, s, s) += p.p_right + stay;
            at(1, s, s - 1) += p.p_back;
        } else {
            at(1, s, s + 1) += p.p_right;
            at(1, s, s) += stay;
            at(1, s, s - 1) += p.p_back;
        }
    }
    std::vector<double> r(S * A, 0.0);
    r[0 * A + 0] = p.r_left;
    r[(S - 1) * A + 1] = p.r_right;
    return TabularMdp(S, A, std::move(P), std::move(r), 0);
}

TabularMdp make_random_dirichlet(std::size_t n_states, std::size_t n_actions, double alpha,
                                 Rng& rng, std::size_t max_attempts) {
    if (!(alpha > 0.0)) throw std::invalid_argument("Dirichlet alpha must be positive");
    if (n_states == 0 || n_actions == 0)
        throw std::invalid_argument("random MDP dimensions must be positive");
    constexpr int kRewardLevels = 11;
    const std::size_t S = n_states;
    const std::size_t A = n_actions;

    g_last_rejections = 0;
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<double> P(A * S * S);
        std::gamma_distribution<double> draw(alpha, 1.0);
        for (std::size_t row = 0; row < A * S; ++row) {
            double total = 0.0;
            for (std::size_t j = 0; j < S; ++j) total += P[row * S + j] = draw(rng);
            if (total <= 0.0) {
                P[row * S + rng() % S] = 1.0;
                continue;
            }
            for (std::size_t j = 0; j < S; ++j) P[row * S + j] /= total;
        }
        std::vector<double> r(S * A);
        for (double& x : r)
            x = static_cast<double>(rng() % kRewardLevels) / (kRewardLevels - 1);

        TabularMdp mdp = TabularMdp::unchecked(S, A, std::move(P), std::move(r), 0);
        if (check_communicating(mdp)) return mdp;
        ++g_last_rejections;
    }
    throw std::runtime_error("make_random_dirichlet: no communicating MDP after " +
                             std::to_string(max_attempts) + " draws");
}

std::size_t last_dirichlet_rejections() { return g_last_rejections; }

TabularMdp make_cycle(std::size_t n, const std::vector<double>& rewards, bool with_stay) {
    if (n < 2) throw std::invalid_argument("cycle needs at least 2 states");
    if (rewards.size() != n) throw std::invalid_argument("cycle needs one reward per state");
    const std::size_t A = with_stay ? 2 : 1;
    std::vector<double> P(A * n * n, 0.0);
    std::vector<double> r(n * A);
    for (State s = 0; s < n; ++s) {
        P[(0 * n + s) * n + (s + 1) % n] = 1.0;
        if (with_stay) P[(1 * n + s) * n + s] = 1.0;
        for (Action a = 0; a < A; ++a) r[s * A + a] = rewards[s];
    }
    return TabularMdp(n, A, std::move(P), std::move(r), 0);
}

EnvKind parse_env_kind(const std::string& name) {
    if (name == "river_swim" || name == "riverswim") return EnvKind::RiverSwim;
    if (name == "random_dirichlet") return EnvKind::RandomDirichlet;
    if (name == "cycle") return EnvKind::Cycle;
    throw std::invalid_argument("unknown environment kind '" + name +
                                "' (expected river_swim, random_dirichlet or cycle)");
}

std::string to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::RiverSwim: return "river_swim";
        case EnvKind::RandomDirichlet: return "random_dirichlet";
        case EnvKind::Cycle: return "cycle";
    }
    return "unknown";
}

std::string describe(const EnvSpec& spec) {
    switch (spec.kind) {
        case EnvKind::RiverSwim: return "river_swim(n=" + std::to_string(spec.river_swim.n) + ")";
        case EnvKind::RandomDirichlet:
            return "random_dirichlet(S=" + std::to_string(spec.n_states) +
                   ",A=" + std::to_string(spec.n_actions) + ")";
        case EnvKind::Cycle: return "cycle(n=" + std::to_string(spec.cycle_rewards.size()) + ")";
    }
    return "unknown";
}

TabularMdp make_env(const EnvSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case EnvKind::RiverSwim: return make_river_swim(spec.river_swim);
        case EnvKind::RandomDirichlet: {
            Rng rng = make_rng(seed, kEnvStream);
            return make_random_dirichlet(spec.n_states, spec.n_actions, spec.alpha, rng);
        }
        case EnvKind::Cycle:
            return make_cycle(spec.cycle_rewards.size(), spec.cycle_rewards, spec.cycle_stay);
    }
    throw std::invalid_argument("unknown environment kind");
}

}  // namespace cpsrl
