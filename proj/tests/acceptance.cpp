// Acceptance gate: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit status is nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpsrl/diagnostics.hpp"
#include "cpsrl/env_suite.hpp"
#include "cpsrl/experiment.hpp"
#include "cpsrl/output.hpp"
#include "cpsrl/planning.hpp"
#include "cpsrl/stats.hpp"

using namespace cpsrl;

namespace {

struct Outcome {
    bool passed = false;
    std::string summary;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

void print_reports(const std::vector<CheckReport>& reports) {
    for (const auto& r : reports)
        std::printf("    %-4s %-42s stat=%-12.6g thr=%-12.6g n=%llu\n", r.passed ? "ok" : "FAIL",
                    r.name.c_str(), r.statistic, r.threshold,
                    static_cast<unsigned long long>(r.samples));
}

// Runs a registered check once with a fixed seed; no retry.
Outcome registered(const std::string& name, std::uint64_t seed = 1) {
    for (const auto& check : check_registry()) {
        if (check.name != name) continue;
        const auto reports = check.run(seed);
        print_reports(reports);
        const bool ok = std::all_of(reports.begin(), reports.end(),
                                    [](const CheckReport& r) { return r.passed; });
        std::size_t failed = 0;
        for (const auto& r : reports) failed += !r.passed;
        return {ok, fmt("%zu/%zu reports within threshold", reports.size() - failed,
                        reports.size())};
    }
    return {false, "check '" + name + "' not registered"};
}

// Brute force: every deterministic policy evaluated by a QR solve of
// (I - gamma P_pi) v = r_pi; the optimum is the elementwise maximum.
Eigen::VectorXd brute_force_optimum(const TabularMdp& mdp, double gamma) {
    const std::size_t S = mdp.n_states(), A = mdp.n_actions();
    Eigen::VectorXd best = Eigen::VectorXd::Constant(S, -1e300);
    std::vector<Action> choice(S, 0);
    for (;;) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S);
        Eigen::VectorXd r(S);
        for (State s = 0; s < S; ++s) {
            r(s) = mdp.reward(s, choice[s]);
            for (State n = 0; n < S; ++n) M(s, n) -= gamma * mdp.transition(choice[s], s, n);
        }
        best = best.cwiseMax(Eigen::VectorXd(M.colPivHouseholderQr().solve(r)));
        std::size_t i = 0;
        while (i < S && ++choice[i] == A) choice[i++] = 0;
        if (i == S) break;
    }
    return best;
}

Outcome planner_correctness() {
    Rng rng = make_rng(2024, 1);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t S = 2 + rng() % 4;
        const std::size_t A = 1 + rng() % 3;
        const TabularMdp mdp = make_random_dirichlet(S, A, 1.0, rng);
        const ValueReport solved = solve_discounted(mdp, 0.9);
        const Eigen::VectorXd oracle = brute_force_optimum(mdp, 0.9);
        const Eigen::VectorXd greedy_value = evaluate_discounted(mdp, solved.policy, 0.9).v;
        worst = std::max({worst, (solved.v - oracle).cwiseAbs().maxCoeff(),
                          (greedy_value - oracle).cwiseAbs().maxCoeff()});
    }
    return {worst <= 1e-6, fmt("200 MDPs, max |V - V_brute| = %.3g (tol 1e-6)", worst)};
}

struct RegretPair {
    double cpsrl;
    double cpsrl_se;
    double random;
    double cpsrl_quarter;
    double cpsrl_curve_quarter;
};

RunningStats regret_stats(const AgentBatch& batch) {
    RunningStats stats;
    for (const auto& run : batch.runs) stats.add(run.total_regret);
    return stats;
}

double mean_regret(const AgentBatch& batch) { return regret_stats(batch).mean(); }

RegretPair regret_at(RunConfig config) {
    config.agents = {AgentKind::Cpsrl, AgentKind::Random};
    const BatchResult full = run_batch(config, false);
    const AgentBatch& cpsrl = full.agents[0];
    const Time quarter_t = config.horizon / 4;
    double curve_quarter = 0.0;
    for (const auto& p : cpsrl.aggregate)
        if (p.t == quarter_t) curve_quarter = p.mean;

    RunConfig quarter = config;
    quarter.horizon = quarter_t;
    quarter.agents = {AgentKind::Cpsrl};
    const BatchResult short_run = run_batch(quarter, false);
    return {mean_regret(cpsrl), regret_stats(cpsrl).std_error(), mean_regret(full.agents[1]),
            mean_regret(short_run.agents[0]), curve_quarter};
}

Outcome regret_behaviour() {
    RunConfig base;
    base.schedule = ScheduleKind::HorizonTuned;
    base.horizon = 100'000;
    base.log_every = 25'000;
    base.seeds.clear();
    for (std::uint64_t s = 1; s <= 20; ++s) base.seeds.push_back(s);

    RunConfig river = base;
    river.env.kind = EnvKind::RiverSwim;
    RunConfig dirichlet = base;
    dirichlet.env.kind = EnvKind::RandomDirichlet;
    dirichlet.env.n_states = 5;
    dirichlet.env.n_actions = 2;
    dirichlet.env.alpha = 1.0;
    dirichlet.prior_alpha = 1.0;

    bool ok = true;
    std::string summary;
    for (const auto& [label, config] : {std::pair{"river_swim_6", river},
                                        std::pair{"random_dirichlet_5x2", dirichlet}}) {
        const RegretPair r = regret_at(config);
        const double fraction = r.cpsrl / r.random;
        const double growth = r.cpsrl / r.cpsrl_quarter;
        const bool env_ok = fraction < 0.2 && growth < 3.0;
        ok = ok && env_ok;
        std::printf("    %-4s %-20s regret %.1f +- %.1f, random %.1f (%.1f%%), regret(T/4) %.1f, "
                    "growth %.2f, same-run growth %.2f\n",
                    env_ok ? "ok" : "FAIL", label, r.cpsrl, r.cpsrl_se, r.random, 100.0 * fraction,
                    r.cpsrl_quarter, growth, r.cpsrl / r.cpsrl_curve_quarter);
        summary += fmt("%s%s: %.1f%% of random, growth %.2f", summary.empty() ? "" : "; ", label,
                       100.0 * fraction, growth);
    }
    return {ok, summary};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "cpsrl_acceptance_determinism";
    std::filesystem::remove_all(root);

    std::size_t compared = 0;
    std::vector<std::string> mismatches;
    std::vector<RunConfig> configs(3);
    configs[0].env.kind = EnvKind::RiverSwim;
    configs[0].agents = {AgentKind::Cpsrl, AgentKind::Tsde, AgentKind::Doubling, AgentKind::Random};
    configs[1].env.kind = EnvKind::RandomDirichlet;
    configs[1].schedule = ScheduleKind::DoublingTrick;
    configs[1].agents = {AgentKind::Cpsrl, AgentKind::Tsde};
    configs[2].env.kind = EnvKind::Cycle;
    configs[2].env.cycle_stay = true;
    configs[2].schedule = ScheduleKind::Fixed;
    configs[2].gamma = 0.95;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        RunConfig& config = configs[c];
        config.horizon = 5'000;
        config.seeds = {3, 17, 123456789};
        config.write_steps = true;
        std::vector<std::filesystem::path> dirs;
        for (int rep = 0; rep < 2; ++rep) {
            config.output_dir = root / ("config" + std::to_string(c)) / ("rep" + std::to_string(rep));
            run_batch(config);
            dirs.push_back(config.output_dir);
        }
        for (const auto& entry : std::filesystem::directory_iterator(dirs[0])) {
            const auto name = entry.path().filename();
            ++compared;
            if (slurp(entry.path()) != slurp(dirs[1] / name))
                mismatches.push_back(name.string());
        }
    }
    std::filesystem::remove_all(root);
    std::string summary = fmt("%zu output files compared across two invocations", compared);
    if (!mismatches.empty()) summary += ", first mismatch " + mismatches.front();
    return {mismatches.empty() && compared > 0, summary};
}

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;  // 0 means no stated limit
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "planner matches brute-force policy enumeration", 60, planner_correctness},
        {2, "reward averaging time bounds the discounted value gap", 300,
         [] { return registered("lemma1"); }},
        {3, "pseudo-episode return is unbiased for V^gamma", 120,
         [] { return registered("unbiased_return"); }},
        {4, "value decomposition identity", 0, [] { return registered("value_decomposition"); }},
        {5, "posterior sampling property at resample times", 0,
         [] { return registered("posterior_sampling"); }},
        {6, "pseudo-episode length law and episode count", 0,
         [] { return registered("episodes"); }},
        {7, "confidence set coverage", 600, [] { return registered("confidence_coverage"); }},
        {8, "regret well below random and sublinear growth", 1800, regret_behaviour},
        {9, "expected value gap equals expected sampled gap", 0,
         [] { return registered("discounted_regret"); }},
        {10, "byte-identical outputs for identical config and seed", 0, determinism},
    };

    std::vector<std::string> lines;
    int failures = 0;
    for (const auto& c : criteria) {
        std::printf("criterion %d: %s\n", c.id, c.title.c_str());
        std::fflush(stdout);
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool passed = outcome.passed;
        std::string budget;
        if (c.budget_seconds > 0) {
            const bool in_time = seconds < c.budget_seconds;
            passed = passed && in_time;
            budget = fmt(", limit %.0f s%s", c.budget_seconds, in_time ? "" : " EXCEEDED");
        }
        failures += !passed;
        lines.push_back(fmt("[%s] %2d %s: %s (%.1f s%s)", passed ? "PASS" : "FAIL", c.id,
                            c.title.c_str(), outcome.summary.c_str(), seconds, budget.c_str()));
        std::printf("%s\n", lines.back().c_str());
        std::fflush(stdout);
    }

    std::printf("\nacceptance summary\n");
    for (const auto& line : lines) std::printf("%s\n", line.c_str());
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
