#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpsrl/agents.hpp"
#include "cpsrl/env_suite.hpp"

namespace cpsrl {

enum class ScheduleKind { Fixed, HorizonTuned, DoublingTrick };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

struct RunConfig {
    EnvSpec env;
    std::vector<AgentKind> agents{AgentKind::Cpsrl};
    ScheduleKind schedule = ScheduleKind::HorizonTuned;
    /// Used by ScheduleKind::Fixed.
    double gamma = 0.9;
    Time horizon = 10'000;
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path output_dir = "out";
    /// 0 selects max(1, T/1000).
    Time log_every = 0;
    double prior_alpha = 1.0;
    double planner_tol = 1e-8;
    std::uint64_t doubling_base_length = 1;
    bool resample_at_schedule_boundary = false;
    /// Also write the per-step records (t, s, a, r, lambda* - r).
    bool write_steps = false;
};

/// Raised for invalid configurations (CLI exit code 1).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a run fails (CLI exit code 2).
class RunError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

void validate(const RunConfig& config);
Time effective_log_every(const RunConfig& config);
GammaSchedule resolve_schedule(const RunConfig& config, std::size_t n_states,
                               std::size_t n_actions);
AgentConfig agent_config(const RunConfig& config, AgentKind kind, std::size_t n_states,
                         std::size_t n_actions);

struct StepRecord {
    Time t;
    State s;
    Action a;
    double reward;
    /// lambda* - R_{t+1}
    double regret;
};

struct EpisodeRecord {
    std::uint64_t k;
    Time t_k;
    Time length;
    double gamma;
    State start_state;
    /// V*_E(s_k1) - V_{pi_k,E}(s_k1)
    double delta;
    /// V_{pi_k,E^k}(s_k1) - V_{pi_k,E}(s_k1); NaN for agents without a sampled model.
    double delta_tilde;
};

struct CurvePoint {
    Time t;
    double cumulative_regret;
    std::uint64_t k;
    double gamma;
};

/// Full record of one (agent, env, seed) run. Steps are indexed from t = 1;
/// the record for step t carries R_{t} in the 1-based convention, i.e. the
/// reward of the t-th transition.
struct RunLog {
    std::string agent;
    std::uint64_t seed = 0;
    double lambda_star = 0.0;
    std::vector<StepRecord> steps;
    std::vector<EpisodeRecord> episodes;
    std::vector<CurvePoint> curve;
    std::uint64_t realized_k = 0;
    std::uint64_t planned_k = 0;
    double total_regret = 0.0;
    double sum_delta = 0.0;
    double sum_delta_tilde = 0.0;
};

RunLog run_single(const RunConfig& config, AgentKind agent, std::uint64_t seed);

struct AggregatePoint {
    Time t;
    double mean;
    double std_error;
    std::size_t n;
};

/// Mean and standard error across runs at each logged time.
std::vector<AggregatePoint> aggregate_curves(const std::vector<RunLog>& runs);

struct AgentBatch {
    AgentKind agent;
    std::vector<RunLog> runs;
    std::vector<AggregatePoint> aggregate;
};

struct BatchResult {
    std::vector<AgentBatch> agents;
    std::vector<std::filesystem::path> files;
};

/// Runs every (agent, seed) pair concurrently and writes per-seed curve and
/// episode CSVs, one aggregate CSV per agent, summary.json and regret.svg into
/// output_dir. When write_files is false nothing touches the filesystem.
BatchResult run_batch(const RunConfig& config, bool write_files = true);

}  // namespace cpsrl
