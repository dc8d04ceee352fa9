#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cpsrl/config.hpp"
#include "cpsrl/experiment.hpp"
#include "cpsrl/output.hpp"
#include "cpsrl/planning.hpp"
#include "cpsrl/stats.hpp"

using namespace cpsrl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cpsrl_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Command {
    int status;
    std::string output;
};

Command run_cli(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "cli_output.txt";
    const std::string cmd = std::string(CPSRL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
}

RunConfig small_config() {
    RunConfig config;
    config.env.kind = EnvKind::RiverSwim;
    config.schedule = ScheduleKind::Fixed;
    config.gamma = 0.9;
    config.horizon = 2'000;
    config.log_every = 100;
    return config;
}

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig c = parse_config(R"(
env:
  kind: random_dirichlet
  n_states: 4
  n_actions: 3
  alpha: 0.5
agents: [cpsrl, random]
schedule: {kind: fixed, gamma: 0.95}
horizon: 5000
seeds: "1-3,10"
output: results/demo
log_every: 50
prior_alpha: 0.5
write_steps: true
)");
    CHECK(c.env.kind == EnvKind::RandomDirichlet);
    CHECK(c.env.n_states == 4);
    CHECK(c.env.alpha == 0.5);
    CHECK(c.agents == std::vector<AgentKind>{AgentKind::Cpsrl, AgentKind::Random});
    CHECK(c.schedule == ScheduleKind::Fixed);
    CHECK(c.gamma == 0.95);
    CHECK(c.horizon == 5'000);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 10});
    CHECK(c.output_dir == fs::path("results/demo"));
    CHECK(c.log_every == 50);
    CHECK(c.write_steps);

    const RunConfig scalar = parse_config("env: river_swim\nagent: tsde\nschedule: doubling\nseeds: [4, 5]\n");
    CHECK(scalar.agents == std::vector<AgentKind>{AgentKind::Tsde});
    CHECK(scalar.schedule == ScheduleKind::DoublingTrick);
    CHECK(scalar.seeds == std::vector<std::uint64_t>{4, 5});

    CHECK(parse_config("").horizon == RunConfig{}.horizon);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("horizn: 10"), ConfigError);
    CHECK_THROWS_AS(parse_config("env: {kind: river_swim, size: 3}"), ConfigError);
    CHECK_THROWS_AS(parse_config("agent: ucrl"), ConfigError);
    CHECK_THROWS_AS(parse_config("schedule: geometric"), ConfigError);
    CHECK_THROWS_AS(parse_config("horizon: [1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_config("- a\n- b"), ConfigError);
    CHECK_THROWS_AS(parse_seed_list("5-2"), ConfigError);
    CHECK_THROWS_AS(parse_seed_list("x"), ConfigError);
    CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);

    RunConfig bad;
    bad.horizon = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = RunConfig{};
    bad.seeds.clear();
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = RunConfig{};
    bad.gamma = 1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("run log invariants") {
    for (AgentKind kind : {AgentKind::Cpsrl, AgentKind::Tsde, AgentKind::Doubling,
                           AgentKind::Random}) {
        const RunConfig config = small_config();
        const RunLog log = run_single(config, kind, 7);
        CHECK(log.steps.size() == config.horizon);

        Time total_length = 0;
        for (const auto& e : log.episodes) total_length += e.length;
        CHECK(total_length == config.horizon);
        for (std::size_t i = 1; i < log.episodes.size(); ++i)
            CHECK(log.episodes[i].t_k == log.episodes[i - 1].t_k + log.episodes[i - 1].length);
        CHECK(log.realized_k == log.episodes.size());

        double prefix = 0.0;
        std::size_t next_point = 0;
        for (const auto& step : log.steps) {
            CHECK(step.regret == log.lambda_star - step.reward);
            prefix += step.regret;
            if (next_point < log.curve.size() && log.curve[next_point].t == step.t) {
                CHECK(log.curve[next_point].cumulative_regret == prefix);
                ++next_point;
            }
        }
        CHECK(next_point == log.curve.size());
        CHECK(log.curve.size() == 20);
        CHECK(log.total_regret == prefix);

        for (const auto& e : log.episodes) {
            CHECK(e.delta >= -1e-8);
            CHECK(std::isnan(e.delta_tilde) == (kind == AgentKind::Random));
        }
    }
}

TEST_CASE("log cadence defaults to a thousand points") {
    RunConfig config = small_config();
    config.log_every = 0;
    config.horizon = 10'000;
    CHECK(effective_log_every(config) == 10);
    config.horizon = 500;
    CHECK(effective_log_every(config) == 1);
}

TEST_CASE("random agent regret grows at lambda* minus its own gain") {
    RunConfig config = small_config();
    config.horizon = 200'000;
    config.log_every = 100'000;
    const RunLog log = run_single(config, AgentKind::Random, 3);
    const TabularMdp env = make_env(config.env, 3);
    const double slope = optimal_gain(env) - average_reward(env, Policy::uniform(6, 2))(0);
    CHECK(slope >= 0.0);
    CHECK(log.total_regret / config.horizon == doctest::Approx(slope).epsilon(0.05));
}

TEST_CASE("following the optimal policy keeps expected regret within the averaging time") {
    const TabularMdp env = make_river_swim();
    const Policy right = Policy::deterministic(2, std::vector<Action>(6, 1));
    const double lambda = optimal_gain(env);
    const double tau = reward_averaging_time(env, right, 10'000).tau_hat;
    Rng rng = make_rng(6);
    RunningStats regret;
    for (int run = 0; run < 4'000; ++run) {
        State s = 0;
        double total = 0.0;
        for (int t = 0; t < 2'000; ++t) {
            const StepResult next = step(env, s, 1, rng);
            total += lambda - next.reward;
            s = next.next_state;
        }
        regret.add(total);
    }
    CHECK(std::abs(regret.mean()) <= tau + 3 * regret.std_error());
}

TEST_CASE("runs are reproducible") {
    RunConfig config = small_config();
    config.schedule = ScheduleKind::DoublingTrick;
    const RunLog a = run_single(config, AgentKind::Cpsrl, 11);
    const RunLog b = run_single(config, AgentKind::Cpsrl, 11);
    const fs::path dir = scratch("repro");
    write_step_csv(dir / "a.csv", a);
    write_step_csv(dir / "b.csv", b);
    write_episode_csv(dir / "a_ep.csv", a);
    write_episode_csv(dir / "b_ep.csv", b);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a_ep.csv") == slurp(dir / "b_ep.csv"));
    const RunLog c = run_single(config, AgentKind::Cpsrl, 12);
    write_step_csv(dir / "c.csv", c);
    CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
    fs::remove_all(dir);
}

TEST_CASE("batch outputs") {
    RunConfig config = small_config();
    config.seeds = {1, 2};
    config.output_dir = scratch("batch");
    const BatchResult result = run_batch(config);
    CHECK(fs::exists(config.output_dir / "cpsrl_seed1.csv"));
    CHECK(fs::exists(config.output_dir / "cpsrl_seed2.csv"));
    CHECK(fs::exists(config.output_dir / "cpsrl_aggregate.csv"));
    CHECK(fs::exists(config.output_dir / "summary.json"));
    CHECK(fs::exists(config.output_dir / "regret.svg"));
    CHECK_FALSE(fs::exists(config.output_dir / "cpsrl_seed1_steps.csv"));

    const auto aggregate = read_aggregate_csv(config.output_dir / "cpsrl_aggregate.csv");
    REQUIRE(aggregate.size() == 20);
    const auto& runs = result.agents.front().runs;
    const double mean = 0.5 * (runs[0].total_regret + runs[1].total_regret);
    CHECK(aggregate.back().mean == doctest::Approx(mean));
    CHECK(aggregate.back().n == 2);

    const auto curve = read_curve_csv(config.output_dir / "cpsrl_seed2.csv");
    REQUIRE(curve.size() == runs[1].curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(curve[i].cumulative_regret == runs[1].curve[i].cumulative_regret);
        CHECK(curve[i].gamma == runs[1].curve[i].gamma);
        CHECK(curve[i].k == runs[1].curve[i].k);
    }
    fs::remove_all(config.output_dir);
}

TEST_CASE("a failing run leaves an error manifest") {
    RunConfig config = small_config();
    config.env.kind = EnvKind::Cycle;
    config.env.cycle_rewards = {0.5};
    config.output_dir = scratch("failure");
    CHECK_THROWS_AS(run_batch(config), RunError);
    const std::string manifest = slurp(config.output_dir / "errors.json");
    CHECK(manifest.find("cycle needs at least 2 states") != std::string::npos);
    fs::remove_all(config.output_dir);
}

TEST_CASE("number formatting round trips") {
    for (double x : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456.789, std::nextafter(1.0, 2.0)})
        CHECK(parse_double(format_double(x)) == x);
    CHECK(std::isnan(parse_double(format_double(std::nan("")))));
    CHECK_THROWS(parse_double("1.5x"));
}

TEST_CASE("csv readers check their schema") {
    const fs::path dir = scratch("schema");
    std::ofstream(dir / "bad.csv") << "t,mean,stderr,n\n1,2,3,4\n";
    CHECK_THROWS(read_aggregate_csv(dir / "bad.csv"));
    CHECK_THROWS(read_curve_csv(dir / "missing.csv"));
    fs::remove_all(dir);
}

TEST_CASE("svg rendering") {
    const std::string svg = render_regret_svg(
        {{"cpsrl", {{10, 1.0, 0.1, 2}, {20, 1.5, 0.2, 2}}}, {"random", {{10, 5.0, 0.1, 2}}}},
        "demo");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find(">cpsrl<") != std::string::npos);
    CHECK(svg.find(">random<") != std::string::npos);
}

TEST_CASE("command line exit codes") {
    const fs::path dir = scratch("cli");

    const Command unknown = run_cli("verify no_such_check", dir);
    CHECK(unknown.status == 1);
    CHECK(unknown.output.find("lemma1") != std::string::npos);
    CHECK(unknown.output.find("posterior_sampling") != std::string::npos);

    const fs::path report = dir / "report.json";
    const Command one = run_cli("verify lemma1 --report " + report.string(), dir);
    CHECK(one.status == 0);
    CHECK(one.output.find("lemma1:") != std::string::npos);
    CHECK(one.output.find("unbiased_return") == std::string::npos);
    CHECK(slurp(report).find("\"passed\": true") != std::string::npos);

    std::ofstream(dir / "bad.yaml") << "horizon: -3\nunknown_key: 1\n";
    CHECK(run_cli("run " + (dir / "bad.yaml").string(), dir).status == 1);
    CHECK(run_cli("run " + (dir / "missing.yaml").string(), dir).status == 1);

    std::ofstream(dir / "ok.yaml") << "env: river_swim\nagents: [cpsrl, random]\nhorizon: 1000\n";
    const fs::path out = dir / "out";
    const Command run = run_cli("run " + (dir / "ok.yaml").string() + " --seeds 1-2 --out " +
                                    out.string() + " --schedule fixed --gamma 0.8",
                                dir);
    CHECK(run.status == 0);
    CHECK(fs::exists(out / "random_seed2.csv"));
    CHECK(slurp(out / "summary.json").find("\"gamma\": 0.8") != std::string::npos);

    const Command bad_gamma =
        run_cli("run " + (dir / "ok.yaml").string() + " --gamma 1.5 --out " + out.string(), dir);
    CHECK(bad_gamma.status == 1);

    std::ofstream(dir / "broken_env.yaml") << "env: {kind: cycle, rewards: [0.5]}\nhorizon: 10\n";
    CHECK(run_cli("run " + (dir / "broken_env.yaml").string() + " --out " + (dir / "b").string(),
                  dir)
              .status == 2);

    const fs::path svg = dir / "plot.svg";
    CHECK(run_cli("plot " + (out / "cpsrl_aggregate.csv").string() + " " +
                      (out / "random_aggregate.csv").string() + " --out " + svg.string(),
                  dir)
              .status == 0);
    CHECK(slurp(svg).find(">random<") != std::string::npos);
    CHECK(run_cli("plot " + (dir / "nope.csv").string(), dir).status == 1);

    CHECK(run_cli("", dir).status == 1);
    fs::remove_all(dir);
}
