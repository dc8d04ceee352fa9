#include "cpsrl/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>

#include "cpsrl/output.hpp"
#include "cpsrl/planning.hpp"
#include "cpsrl/posterior.hpp"
#include "cpsrl/stats.hpp"

namespace cpsrl {

namespace {

constexpr std::uint64_t kAgentStream = 2;
constexpr std::uint64_t kTransitionStream = 3;
// Planner tolerance for the simulator's own value computations.
constexpr double kOracleTol = 1e-10;

}  // namespace

ScheduleKind parse_schedule_kind(const std::string& name) {
    if (name == "fixed") return ScheduleKind::Fixed;
    if (name == "horizon_tuned") return ScheduleKind::HorizonTuned;
    if (name == "doubling" || name == "doubling_trick") return ScheduleKind::DoublingTrick;
    throw std::invalid_argument("unknown schedule '" + name +
                                "' (expected fixed, horizon_tuned or doubling_trick)");
}

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Fixed: return "fixed";
        case ScheduleKind::HorizonTuned: return "horizon_tuned";
        case ScheduleKind::DoublingTrick: return "doubling_trick";
    }
    return "unknown";
}

void validate(const RunConfig& config) {
    if (config.horizon < 1) throw ConfigError("horizon must be at least 1");
    if (config.seeds.empty()) throw ConfigError("at least one seed is required");
    if (config.agents.empty()) throw ConfigError("at least one agent is required");
    if (!(config.gamma >= 0.0 && config.gamma < 1.0))
        throw ConfigError("gamma must lie in [0,1)");
    if (!(config.prior_alpha > 0.0)) throw ConfigError("prior_alpha must be positive");
    if (!(config.planner_tol > 0.0)) throw ConfigError("planner_tol must be positive");
    if (config.doubling_base_length < 1) throw ConfigError("doubling_base_length must be >= 1");
}

Time effective_log_every(const RunConfig& config) {
    if (config.log_every > 0) return config.log_every;
    return std::max<Time>(1, config.horizon / 1000);
}

GammaSchedule resolve_schedule(const RunConfig& config, std::size_t n_states,
                               std::size_t n_actions) {
    switch (config.schedule) {
        case ScheduleKind::Fixed: return FixedGamma{config.gamma};
        case ScheduleKind::HorizonTuned: return HorizonTuned{config.horizon, n_states, n_actions};
        case ScheduleKind::DoublingTrick: return DoublingTrick{n_states, n_actions};
    }
    throw ConfigError("unknown schedule");
}

AgentConfig agent_config(const RunConfig& config, AgentKind kind, std::size_t n_states,
                         std::size_t n_actions) {
    AgentConfig out;
    out.kind = kind;
    out.schedule = resolve_schedule(config, n_states, n_actions);
    out.prior_alpha = config.prior_alpha;
    out.planner_tol = config.planner_tol;
    out.doubling_base_length = config.doubling_base_length;
    out.resample_at_schedule_boundary = config.resample_at_schedule_boundary;
    return out;
}

RunLog run_single(const RunConfig& config, AgentKind kind, std::uint64_t seed) {
    validate(config);
    const TabularMdp env = make_env(config.env, seed);
    const std::size_t S = env.n_states();
    const std::size_t A = env.n_actions();
    const AgentConfig agent_cfg = agent_config(config, kind, S, A);
    auto agent = make_agent(agent_cfg, S, A, env.rewards(), make_rng(seed, kAgentStream));
    Rng transitions = make_rng(seed, kTransitionStream);

    RunLog log;
    log.agent = to_string(kind);
    log.seed = seed;
    log.lambda_star = optimal_gain(env);
    log.planned_k = planned_episode_count(gamma_at(agent_cfg.schedule, 1), config.horizon);
    log.steps.reserve(config.horizon);

    std::map<double, Eigen::VectorXd> optimal_values;  // V*_E per distinct gamma
    auto optimal_value = [&](double gamma) -> const Eigen::VectorXd& {
        auto it = optimal_values.find(gamma);
        if (it == optimal_values.end())
            it = optimal_values.emplace(gamma, solve_discounted(env, gamma, kOracleTol).v).first;
        return it->second;
    };

    const Time log_every = effective_log_every(config);
    State s = env.initial_state();
    double cumulative = 0.0;
    for (Time t = 1; t <= config.horizon; ++t) {
        const Action a = agent->act(t, s);
        if (agent->episode_started()) {
            const Episode& ep = agent->episode();
            if (!log.episodes.empty()) log.episodes.back().length = t - log.episodes.back().t_k;
            const double v_policy = evaluate_discounted(env, ep.policy, ep.gamma, kOracleTol).v(s);
            const double delta = optimal_value(ep.gamma)(s) - v_policy;
            double delta_tilde = std::numeric_limits<double>::quiet_NaN();
            if (ep.sampled)
                delta_tilde =
                    evaluate_discounted(*ep.sampled, ep.policy, ep.gamma, kOracleTol).v(s) -
                    v_policy;
            log.episodes.push_back({ep.k, t, 0, ep.gamma, s, delta, delta_tilde});
        }

        const StepResult next = step(env, s, a, transitions);
        const double regret = log.lambda_star - next.reward;
        cumulative += regret;
        log.steps.push_back({t, s, a, next.reward, regret});
        agent->observe(s, a, next.reward, next.next_state);
        s = next.next_state;

        if (t % log_every == 0 || t == config.horizon)
            log.curve.push_back(
                {t, cumulative, agent->episode().k, gamma_at(agent_cfg.schedule, t)});
    }
    if (!log.episodes.empty())
        log.episodes.back().length = config.horizon + 1 - log.episodes.back().t_k;

    log.realized_k = log.episodes.size();
    log.total_regret = cumulative;
    for (const EpisodeRecord& e : log.episodes) {
        log.sum_delta += e.delta;
        log.sum_delta_tilde += e.delta_tilde;
    }
    return log;
}

std::vector<AggregatePoint> aggregate_curves(const std::vector<RunLog>& runs) {
    std::vector<AggregatePoint> out;
    if (runs.empty()) return out;
    const std::size_t points = runs.front().curve.size();
    for (const RunLog& r : runs)
        if (r.curve.size() != points)
            throw std::invalid_argument("aggregate_curves: runs logged different time grids");
    for (std::size_t i = 0; i < points; ++i) {
        RunningStats stats;
        for (const RunLog& r : runs) stats.add(r.curve[i].cumulative_regret);
        out.push_back({runs.front().curve[i].t, stats.mean(), stats.std_error(), runs.size()});
    }
    return out;
}

namespace {

std::string run_stem(AgentKind agent, std::uint64_t seed) {
    return to_string(agent) + "_seed" + std::to_string(seed);
}

nlohmann::ordered_json config_json(const RunConfig& config) {
    nlohmann::ordered_json j;
    j["env"] = describe(config.env);
    j["schedule"] = to_string(config.schedule);
    j["gamma"] = config.gamma;
    j["horizon"] = config.horizon;
    j["seeds"] = config.seeds;
    j["log_every"] = effective_log_every(config);
    j["prior_alpha"] = config.prior_alpha;
    j["planner_tol"] = config.planner_tol;
    return j;
}

void write_run_files(const RunConfig& config, AgentKind agent, const RunLog& log,
                     std::vector<std::filesystem::path>& files) {
    const auto stem = config.output_dir / run_stem(agent, log.seed);
    files.push_back(stem.string() + ".csv");
    write_curve_csv(files.back(), log);
    files.push_back(stem.string() + "_episodes.csv");
    write_episode_csv(files.back(), log);
    if (config.write_steps) {
        files.push_back(stem.string() + "_steps.csv");
        write_step_csv(files.back(), log);
    }
}

}  // namespace

BatchResult run_batch(const RunConfig& config, bool write_files) {
    validate(config);
    struct Task {
        AgentKind agent;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (AgentKind agent : config.agents)
        for (std::uint64_t seed : config.seeds) tasks.push_back({agent, seed});

    std::vector<std::optional<RunLog>> logs(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                logs[i] = run_single(config, tasks[i].agent, tasks[i].seed);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const std::size_t n_workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, tasks.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        worker();
    }

    BatchResult result;
    if (write_files) std::filesystem::create_directories(config.output_dir);

    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!errors[i].empty()) {
            manifest.push_back({{"agent", to_string(tasks[i].agent)},
                                {"seed", tasks[i].seed},
                                {"error", errors[i]}});
        } else if (write_files) {
            write_run_files(config, tasks[i].agent, *logs[i], result.files);
        }
    }
    if (!manifest.empty()) {
        if (write_files) {
            const auto path = config.output_dir / "errors.json";
            std::ofstream(path) << manifest.dump(2) << '\n';
        }
        throw RunError(std::to_string(manifest.size()) + " run(s) failed; first error: " +
                       manifest.front()["error"].get<std::string>());
    }

    nlohmann::ordered_json summary;
    summary["config"] = config_json(config);
    std::vector<PlotSeries> series;
    for (AgentKind agent : config.agents) {
        AgentBatch batch{agent, {}, {}};
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (tasks[i].agent == agent) batch.runs.push_back(std::move(*logs[i]));
        batch.aggregate = aggregate_curves(batch.runs);

        RunningStats regret, delta, delta_tilde, gain, episodes;
        nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
        for (const RunLog& log : batch.runs) {
            regret.add(log.total_regret);
            delta.add(log.sum_delta);
            delta_tilde.add(log.sum_delta_tilde);
            gain.add(log.lambda_star);
            episodes.add(static_cast<double>(log.realized_k));
            per_seed.push_back({{"seed", log.seed},
                                {"lambda_star", log.lambda_star},
                                {"regret", log.total_regret},
                                {"realized_k", log.realized_k},
                                {"planned_k", log.planned_k},
                                {"sum_delta", log.sum_delta},
                                {"sum_delta_tilde", log.sum_delta_tilde}});
        }
        summary["agents"][to_string(agent)] = {{"mean_regret", regret.mean()},
                                               {"stderr_regret", regret.std_error()},
                                               {"mean_lambda_star", gain.mean()},
                                               {"mean_realized_k", episodes.mean()},
                                               {"mean_sum_delta", delta.mean()},
                                               {"mean_sum_delta_tilde", delta_tilde.mean()},
                                               {"runs", per_seed}};
        if (write_files) {
            result.files.push_back(config.output_dir / (to_string(agent) + "_aggregate.csv"));
            write_aggregate_csv(result.files.back(), batch.aggregate);
        }
        series.push_back({to_string(agent), batch.aggregate});
        result.agents.push_back(std::move(batch));
    }

    if (write_files) {
        result.files.push_back(config.output_dir / "summary.json");
        std::ofstream(result.files.back()) << summary.dump(2) << '\n';
        result.files.push_back(config.output_dir / "regret.svg");
        std::ofstream(result.files.back())
            << render_regret_svg(series, "cumulative regret, " + describe(config.env));
    }
    return result;
}

}  // namespace cpsrl
