#include "cpsrl/agents.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "cpsrl/planning.hpp"

namespace cpsrl {

namespace {

double gamma_from_effective_horizon(double horizon_over_sa) {
    // 1/(1-gamma) = sqrt(horizon / SA)
    const double gamma = 1.0 - std::sqrt(1.0 / horizon_over_sa);
    return std::clamp(gamma, 0.0, kMaxGamma);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double gamma_at(const GammaSchedule& schedule, Time t) {
    if (t == 0) throw std::invalid_argument("gamma_at: time starts at 1");
    return std::visit(
        overloaded{
            [](const FixedGamma& f) { return std::clamp(f.gamma, 0.0, kMaxGamma); },
            [](const HorizonTuned& h) {
                return gamma_from_effective_horizon(static_cast<double>(h.horizon) /
                                                    static_cast<double>(h.n_states * h.n_actions));
            },
            [t](const DoublingTrick& d) {
                const int k = std::bit_width(t) - 1;  // t in [2^k, 2^{k+1})
                return gamma_from_effective_horizon(std::ldexp(1.0, k + 1) /
                                                    static_cast<double>(d.n_states * d.n_actions));
            }},
        schedule);
}

bool is_schedule_boundary(const GammaSchedule& schedule, Time t) {
    return std::holds_alternative<DoublingTrick>(schedule) && std::has_single_bit(t);
}

std::string describe(const GammaSchedule& schedule) {
    return std::visit(
        overloaded{[](const FixedGamma& f) { return "fixed(" + std::to_string(f.gamma) + ")"; },
                   [](const HorizonTuned& h) {
                       return "horizon_tuned(T=" + std::to_string(h.horizon) + ")";
                   },
                   [](const DoublingTrick&) { return std::string("doubling_trick"); }},
        schedule);
}

bool tsde_should_resample(const TsdeEpisodeStats& history, const PosteriorState& counts, Time t) {
    if (t - history.t_k > history.t_k - history.t_prev) return true;
    const auto& now = counts.visit_counts();
    for (std::size_t i = 0; i < now.size(); ++i) {
        const std::uint64_t before = history.visits_at_start[i];
        if (before == 0 ? now[i] >= 1 : now[i] >= 2 * before) return true;
    }
    return false;
}

bool doubling_duration_should_resample(Time t, Time t_k, std::uint64_t k,
                                       std::uint64_t base_length) {
    if (k == 0) throw std::invalid_argument("episode index starts at 1");
    return t - t_k >= base_length << (k - 1);
}

Action random_agent_act(Rng& rng, std::size_t n_actions) {
    if (n_actions == 1) return 0;
    return static_cast<Action>(uniform01(rng) * static_cast<double>(n_actions));
}

AgentKind parse_agent_kind(const std::string& name) {
    if (name == "cpsrl") return AgentKind::Cpsrl;
    if (name == "tsde") return AgentKind::Tsde;
    if (name == "doubling") return AgentKind::Doubling;
    if (name == "random") return AgentKind::Random;
    throw std::invalid_argument("unknown agent '" + name +
                                "' (expected cpsrl, tsde, doubling or random)");
}

std::string to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::Cpsrl: return "cpsrl";
        case AgentKind::Tsde: return "tsde";
        case AgentKind::Doubling: return "doubling";
        case AgentKind::Random: return "random";
    }
    return "unknown";
}

PosteriorSamplingAgent::PosteriorSamplingAgent(std::size_t n_states, std::size_t n_actions,
                                               std::vector<double> rewards,
                                               const AgentConfig& config, Rng rng)
    : posterior_(n_states, n_actions, config.prior_alpha),
      rewards_(std::move(rewards)),
      config_(config),
      rng_(std::move(rng)) {
    if (rewards_.size() != n_states * n_actions)
        throw std::invalid_argument("agent rewards must have S*A entries");
}

Action PosteriorSamplingAgent::act(Time t, State s) {
    if (t == 0) throw std::invalid_argument("act: time starts at 1");
    started_ = episode_.k == 0 || should_resample(t);
    if (started_) {
        resample(t, s);
        on_resample(t);
    }
    const Action a = episode_.policy.sample(s, rng_);
    after_act(t);
    return a;
}

void PosteriorSamplingAgent::resample(Time t, State s) {
    const double gamma = gamma_at(config_.schedule, t);
    TabularMdp sampled = sample_mdp(posterior_, rewards_, rng_, s);
    Policy policy = solve_discounted(sampled, gamma, config_.planner_tol).policy;
    episode_ = Episode{episode_.k + 1, t, gamma, s, std::move(sampled), std::move(policy)};
}

void PosteriorSamplingAgent::observe(State s, Action a, double, State next) {
    posterior_.update(s, a, next);
}

bool CpsrlAgent::should_resample(Time t) {
    if (clock_.resample_due()) return true;
    return config().resample_at_schedule_boundary && is_schedule_boundary(config().schedule, t);
}

void CpsrlAgent::after_act(Time t) { clock_.draw(gamma_at(config().schedule, t), rng()); }

bool TsdeAgent::should_resample(Time t) {
    return !stats_ || tsde_should_resample(*stats_, *posterior(), t);
}

void TsdeAgent::on_resample(Time t) {
    const Time previous = stats_ ? stats_->t_k : t;
    stats_ = TsdeEpisodeStats{t, previous, posterior()->visit_counts()};
}

bool DoublingDurationAgent::should_resample(Time t) {
    return doubling_duration_should_resample(t, episode().t_k, episode().k,
                                             config().doubling_base_length);
}

RandomAgent::RandomAgent(std::size_t n_states, std::size_t n_actions,
                         const GammaSchedule& schedule, Rng rng)
    : n_actions_(n_actions), schedule_(schedule), rng_(std::move(rng)) {
    episode_.policy = Policy::uniform(n_states, n_actions);
}

Action RandomAgent::act(Time t, State s) {
    started_ = episode_.k == 0;
    if (started_) {
        episode_.k = 1;
        episode_.t_k = t;
        episode_.gamma = gamma_at(schedule_, t);
        episode_.start_state = s;
    }
    return random_agent_act(rng_, n_actions_);
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, std::size_t n_states,
                                  std::size_t n_actions, const std::vector<double>& rewards,
                                  Rng rng) {
    switch (config.kind) {
        case AgentKind::Cpsrl:
            return std::make_unique<CpsrlAgent>(n_states, n_actions, rewards, config,
                                                std::move(rng));
        case AgentKind::Tsde:
            return std::make_unique<TsdeAgent>(n_states, n_actions, rewards, config,
                                               std::move(rng));
        case AgentKind::Doubling:
            return std::make_unique<DoublingDurationAgent>(n_states, n_actions, rewards, config,
                                                           std::move(rng));
        case AgentKind::Random:
            return std::make_unique<RandomAgent>(n_states, n_actions, config.schedule,
                                                 std::move(rng));
    }
    throw std::invalid_argument("unknown agent kind");
}

}  // namespace cpsrl
