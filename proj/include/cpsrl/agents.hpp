#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cpsrl/mdp.hpp"
#include "cpsrl/posterior.hpp"

namespace cpsrl {

using Time = std::uint64_t;

// ---------------------------------------------------------------------------
// Discount schedules
// ---------------------------------------------------------------------------

struct FixedGamma {
    double gamma = 0.9;
};

/// 1/(1 - gamma) = sqrt(T / (S A)).
struct HorizonTuned {
    Time horizon = 1;
    std::size_t n_states = 1;
    std::size_t n_actions = 1;
};

/// 1/(1 - gamma_t) = sqrt(2^{k+1} / (S A)) for t in [2^k, 2^{k+1}).
struct DoublingTrick {
    std::size_t n_states = 1;
    std::size_t n_actions = 1;
};

using GammaSchedule = std::variant<FixedGamma, HorizonTuned, DoublingTrick>;

inline constexpr double kMaxGamma = 1.0 - 1e-9;

/// Discount in force at time t >= 1, clamped to [0, 1 - 1e-9].
double gamma_at(const GammaSchedule& schedule, Time t);

/// True when t opens a new doubling interval (t a power of two) under
/// DoublingTrick; always false for the other schedules.
bool is_schedule_boundary(const GammaSchedule& schedule, Time t);

std::string describe(const GammaSchedule& schedule);

// ---------------------------------------------------------------------------
// Resampling rules
// ---------------------------------------------------------------------------

/// The Bernoulli indicator X_t. Starts with X_1 = 0 (resample due).
class ResampleClock {
  public:
    bool resample_due() const { return pending_; }
    void clear() { pending_ = false; }
    /// Draws X_{t+1} ~ Bernoulli(gamma); a zero marks the next step as a resample.
    void draw(double gamma, Rng& rng) { pending_ = !(uniform01(rng) < gamma); }

  private:
    bool pending_ = true;
};

/// Bookkeeping the TSDE stopping rule needs about the current episode.
struct TsdeEpisodeStats {
    Time t_k = 1;
    /// Start of the previous episode; equals t_k during the first episode.
    Time t_prev = 1;
    std::vector<std::uint64_t> visits_at_start;  // N_{t_k}(s, a)
};

/// True iff t - t_k > t_k - t_{k-1}, or some pair doubled its visit count
/// since t_k (a pair unvisited at t_k counts as doubled on its first visit).
bool tsde_should_resample(const TsdeEpisodeStats& history, const PosteriorState& counts, Time t);

/// True iff t - t_k >= base_length * 2^{k-1}.
bool doubling_duration_should_resample(Time t, Time t_k, std::uint64_t k,
                                       std::uint64_t base_length = 1);

Action random_agent_act(Rng& rng, std::size_t n_actions);

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

enum class AgentKind { Cpsrl, Tsde, Doubling, Random };

AgentKind parse_agent_kind(const std::string& name);
std::string to_string(AgentKind kind);

struct AgentConfig {
    AgentKind kind = AgentKind::Cpsrl;
    GammaSchedule schedule = FixedGamma{0.9};
    double prior_alpha = 1.0;
    double planner_tol = 1e-8;
    /// First episode length L0 of the duration-doubling baseline.
    std::uint64_t doubling_base_length = 1;
    /// CPSRL under DoublingTrick: force a resample when a new interval opens.
    bool resample_at_schedule_boundary = false;
};

/// A pseudo-episode as seen by the agent.
struct Episode {
    std::uint64_t k = 0;
    Time t_k = 0;
    double gamma = 0.0;
    State start_state = 0;
    /// E^k; absent for agents that do not sample models.
    std::optional<TabularMdp> sampled;
    Policy policy;
};

class Agent {
  public:
    virtual ~Agent() = default;

    /// Chooses A_t in state s. May open a new pseudo-episode first.
    virtual Action act(Time t, State s) = 0;
    virtual void observe(State s, Action a, double reward, State next) = 0;

    /// Whether the most recent act() opened a new pseudo-episode.
    bool episode_started() const { return started_; }
    const Episode& episode() const { return episode_; }
    virtual const PosteriorState* posterior() const { return nullptr; }

  protected:
    bool started_ = false;
    Episode episode_{0, 0, 0.0, 0, std::nullopt, Policy::uniform(1, 1)};
};

/// Shared machinery for agents that act greedily on a posterior sample and
/// differ only in when they resample.
class PosteriorSamplingAgent : public Agent {
  public:
    PosteriorSamplingAgent(std::size_t n_states, std::size_t n_actions,
                           std::vector<double> rewards, const AgentConfig& config, Rng rng);

    Action act(Time t, State s) final;
    void observe(State s, Action a, double reward, State next) override;
    const PosteriorState* posterior() const override { return &posterior_; }
    const AgentConfig& config() const { return config_; }

  protected:
    virtual bool should_resample(Time t) = 0;
    virtual void on_resample(Time) {}
    virtual void after_act(Time) {}

    Rng& rng() { return rng_; }

  private:
    void resample(Time t, State s);

    PosteriorState posterior_;
    std::vector<double> rewards_;
    AgentConfig config_;
    Rng rng_;
};

/// Resamples with probability 1 - gamma_t after every step.
class CpsrlAgent : public PosteriorSamplingAgent {
  public:
    using PosteriorSamplingAgent::PosteriorSamplingAgent;

  protected:
    bool should_resample(Time t) override;
    void on_resample(Time) override { clock_.clear(); }
    void after_act(Time t) override;

  private:
    ResampleClock clock_;
};

class TsdeAgent : public PosteriorSamplingAgent {
  public:
    using PosteriorSamplingAgent::PosteriorSamplingAgent;

  protected:
    bool should_resample(Time t) override;
    void on_resample(Time t) override;

  private:
    std::optional<TsdeEpisodeStats> stats_;
};

class DoublingDurationAgent : public PosteriorSamplingAgent {
  public:
    using PosteriorSamplingAgent::PosteriorSamplingAgent;

  protected:
    bool should_resample(Time t) override;
};

class RandomAgent : public Agent {
  public:
    RandomAgent(std::size_t n_states, std::size_t n_actions, const GammaSchedule& schedule,
                Rng rng);

    Action act(Time t, State s) override;
    void observe(State, Action, double, State) override {}

  private:
    std::size_t n_actions_;
    GammaSchedule schedule_;
    Rng rng_;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& config, std::size_t n_states,
                                  std::size_t n_actions, const std::vector<double>& rewards,
                                  Rng rng);

}  // namespace cpsrl
