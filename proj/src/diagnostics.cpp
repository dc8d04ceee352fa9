#include "cpsrl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "cpsrl/env_suite.hpp"
#include "cpsrl/experiment.hpp"
#include "cpsrl/planning.hpp"
#include "cpsrl/posterior.hpp"
#include "cpsrl/stats.hpp"

namespace cpsrl {

namespace {

// Absolute slack added to 3-SE thresholds so that exact-zero cases are not
// decided by solver round-off.
constexpr double kNumericFloor = 1e-9;

}  // namespace

CheckReport make_report(std::string name, std::uint64_t samples, double statistic,
                        double threshold, std::map<std::string, double> details) {
    return {std::move(name), samples, statistic, threshold, statistic <= threshold,
            std::move(details)};
}

std::uint64_t draw_episode_length(double gamma, Rng& rng) {
    if (gamma <= 0.0) return 1;
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    return 1 + static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(gamma)));
}

CheckReport check_unbiased_pseudo_return(const TabularMdp& mdp, const Policy& policy, double gamma,
                                         std::uint64_t n_episodes, Rng& rng) {
    const double target = evaluate_discounted(mdp, policy, gamma).v(mdp.initial_state());
    RunningStats returns;
    for (std::uint64_t i = 0; i < n_episodes; ++i) {
        State s = mdp.initial_state();
        double total = 0.0;
        for (;;) {
            const Action a = policy.sample(s, rng);
            const StepResult next = step(mdp, s, a, rng);
            total += next.reward;
            s = next.next_state;
            if (!(uniform01(rng) < gamma)) break;
        }
        returns.add(total);
    }
    return make_report("unbiased_pseudo_return", n_episodes, std::abs(returns.mean() - target),
                       3.0 * returns.std_error() + kNumericFloor,
                       {{"gamma", gamma},
                        {"mean_return", returns.mean()},
                        {"value", target},
                        {"std_error", returns.std_error()}});
}

CheckReport check_lemma1(const TabularMdp& mdp, const Policy& policy,
                         const std::vector<double>& gammas, long long t_max) {
    const GainReport gain = reward_averaging_time(mdp, policy, t_max);
    double worst = 0.0;
    std::map<std::string, double> details{{"tau_hat", gain.tau_hat},
                                          {"t_max", static_cast<double>(t_max)}};
    for (double gamma : gammas) {
        const Eigen::VectorXd v = evaluate_discounted(mdp, policy, gamma).v;
        const double gap = (v - gain.lambda_per_state / (1.0 - gamma)).cwiseAbs().maxCoeff();
        details["gap@" + std::to_string(gamma)] = gap;
        worst = std::max(worst, gap);
    }
    return make_report("lemma1", gammas.size() * mdp.n_states(), worst, gain.tau_hat + 1e-6,
                       std::move(details));
}

CheckReport check_value_decomposition(const TabularMdp& true_mdp, const TabularMdp& sampled_mdp,
                                      const Policy& policy, double gamma,
                                      std::uint64_t n_episodes, Rng& rng) {
    if (true_mdp.n_states() != sampled_mdp.n_states() ||
        true_mdp.n_actions() != sampled_mdp.n_actions())
        throw std::invalid_argument("check_value_decomposition: dimension mismatch");
    const std::size_t S = true_mdp.n_states();
    const std::size_t A = true_mdp.n_actions();
    const Eigen::VectorXd v_true = evaluate_discounted(true_mdp, policy, gamma).v;
    const Eigen::VectorXd v_hat = evaluate_discounted(sampled_mdp, policy, gamma).v;
    const State s0 = true_mdp.initial_state();
    const double lhs = v_true(s0) - v_hat(s0);

    // Bellman error of the sampled model at (s, a), scaled by gamma
    std::vector<double> bellman_error(S * A, 0.0);
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            const auto p = true_mdp.transition_row(a, s);
            const auto q = sampled_mdp.transition_row(a, s);
            double inner = 0.0;
            for (State next = 0; next < S; ++next) inner += (p[next] - q[next]) * v_hat(next);
            bellman_error[s * A + a] = gamma * inner;
        }
    }

    RunningStats rhs;
    for (std::uint64_t i = 0; i < n_episodes; ++i) {
        State s = s0;
        double total = 0.0;
        for (;;) {
            const Action a = policy.sample(s, rng);
            total += bellman_error[s * A + a];
            s = step(true_mdp, s, a, rng).next_state;
            if (!(uniform01(rng) < gamma)) break;
        }
        rhs.add(total);
    }
    return make_report("value_decomposition", n_episodes, std::abs(rhs.mean() - lhs),
                       3.0 * rhs.std_error() + kNumericFloor,
                       {{"gamma", gamma},
                        {"value_difference", lhs},
                        {"bellman_error_sum", rhs.mean()},
                        {"std_error", rhs.std_error()}});
}

std::vector<CheckReport> check_posterior_sampling_property(
    const PriorSpec& prior, const std::vector<std::pair<std::string, MdpStatistic>>& statistics,
    const std::vector<std::uint64_t>& episodes, std::uint64_t n_runs, Time horizon, double gamma,
    Rng& rng) {
    if (episodes.empty()) throw std::invalid_argument("no episode indices given");
    const std::uint64_t k_max = *std::max_element(episodes.begin(), episodes.end());
    const std::set<std::uint64_t> wanted(episodes.begin(), episodes.end());

    // (statistic index, k) -> statistics of g(E) and g(E^k)
    std::map<std::pair<std::size_t, std::uint64_t>, std::pair<RunningStats, RunningStats>> acc;
    std::uint64_t incomplete = 0;

    AgentConfig config;
    config.schedule = FixedGamma{gamma};
    config.prior_alpha = prior.alpha;

    for (std::uint64_t run = 0; run < n_runs; ++run) {
        const std::uint64_t run_seed = rng();
        Rng env_rng = make_rng(run_seed, 1);
        const TabularMdp env =
            make_random_dirichlet(prior.n_states, prior.n_actions, prior.alpha, env_rng);
        CpsrlAgent agent(env.n_states(), env.n_actions(), env.rewards(), config,
                         make_rng(run_seed, 2));
        Rng transitions = make_rng(run_seed, 3);

        State s = env.initial_state();
        bool reached = false;
        for (Time t = 1; t <= horizon && !reached; ++t) {
            const Action a = agent.act(t, s);
            if (agent.episode_started() && wanted.contains(agent.episode().k)) {
                const TabularMdp& sampled = *agent.episode().sampled;
                for (std::size_t i = 0; i < statistics.size(); ++i) {
                    auto& [truth, draw] = acc[{i, agent.episode().k}];
                    truth.add(statistics[i].second(env));
                    draw.add(statistics[i].second(sampled));
                }
                reached = agent.episode().k == k_max;
            }
            const StepResult next = step(env, s, a, transitions);
            agent.observe(s, a, next.reward, next.next_state);
            s = next.next_state;
        }
        if (!reached) ++incomplete;
    }

    std::vector<CheckReport> reports;
    for (std::size_t i = 0; i < statistics.size(); ++i) {
        for (std::uint64_t k : wanted) {
            const auto& [truth, draw] = acc[{i, k}];
            const double se = std::hypot(truth.std_error(), draw.std_error());
            reports.push_back(make_report(
                "posterior_sampling[" + statistics[i].first + ",k=" + std::to_string(k) + "]",
                truth.count(), std::abs(truth.mean() - draw.mean()), 3.0 * se + 1e-12,
                {{"k", static_cast<double>(k)},
                 {"mean_true", truth.mean()},
                 {"mean_sampled", draw.mean()},
                 {"std_error", se},
                 {"runs_not_reaching_k_max", static_cast<double>(incomplete)}}));
        }
    }
    return reports;
}

CheckReport check_confidence_coverage(const PriorSpec& prior, double gamma, Time horizon,
                                      std::uint64_t n_runs, Rng& rng,
                                      std::optional<double> radius_override) {
    const std::uint64_t k_hat = planned_episode_count(gamma, horizon);
    AgentConfig config;
    config.schedule = FixedGamma{gamma};
    config.prior_alpha = prior.alpha;

    std::uint64_t pairs = 0;
    std::uint64_t violations = 0;
    RunningStats realized_k;
    for (std::uint64_t run = 0; run < n_runs; ++run) {
        const std::uint64_t run_seed = rng();
        Rng env_rng = make_rng(run_seed, 1);
        const TabularMdp env =
            make_random_dirichlet(prior.n_states, prior.n_actions, prior.alpha, env_rng);
        CpsrlAgent agent(env.n_states(), env.n_actions(), env.rewards(), config,
                         make_rng(run_seed, 2));
        Rng transitions = make_rng(run_seed, 3);
        Rng center_rng = make_rng(run_seed, 4);

        State s = env.initial_state();
        for (Time t = 1; t <= horizon; ++t) {
            const Action a = agent.act(t, s);
            if (agent.episode_started()) {
                ConfidenceSet conf = make_confidence_set(*agent.posterior(), env.rewards(),
                                                         agent.episode().k, t, k_hat, center_rng);
                if (radius_override) std::fill(conf.radii.begin(), conf.radii.end(), *radius_override);
                ++pairs;
                if (!in_confidence_set(env, conf)) ++violations;
            }
            const StepResult next = step(env, s, a, transitions);
            agent.observe(s, a, next.reward, next.next_state);
            s = next.next_state;
        }
        realized_k.add(static_cast<double>(agent.episode().k));
    }
    const double freq = pairs ? static_cast<double>(violations) / static_cast<double>(pairs) : 0.0;
    const double se = pairs ? std::sqrt(freq * (1.0 - freq) / static_cast<double>(pairs)) : 0.0;
    return make_report("confidence_coverage", pairs, freq,
                       1.0 / static_cast<double>(k_hat) + 3.0 * se,
                       {{"violations", static_cast<double>(violations)},
                        {"k_hat", static_cast<double>(k_hat)},
                        {"mean_realized_k", realized_k.mean()},
                        {"std_error", se}});
}

double episode_length_cap(double gamma, std::uint64_t big_k) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
    return std::log(2.0 * static_cast<double>(big_k) / (1.0 - gamma)) / (1.0 - gamma);
}

CheckReport check_episode_cap(double gamma, std::uint64_t big_k, std::uint64_t n_trials,
                              Rng& rng) {
    const double m = episode_length_cap(gamma, big_k);
    RunningStats scaled;
    for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
        std::uint64_t long_episodes = 0;
        for (std::uint64_t k = 0; k < big_k; ++k)
            if (static_cast<double>(draw_episode_length(gamma, rng)) > m) ++long_episodes;
        scaled.add(static_cast<double>(long_episodes) / (1.0 - gamma));
    }
    return make_report("episode_cap", n_trials, scaled.mean(), 0.5 + 3.0 * scaled.std_error(),
                       {{"m", m},
                        {"gamma", gamma},
                        {"K", static_cast<double>(big_k)},
                        {"exact_expectation",
                         static_cast<double>(big_k) * std::pow(gamma, std::floor(m)) /
                             (1.0 - gamma)}});
}

namespace {

std::vector<std::uint64_t> clock_episode_lengths(double gamma, std::uint64_t n_episodes,
                                                 Rng& rng) {
    std::vector<std::uint64_t> lengths;
    lengths.reserve(n_episodes);
    ResampleClock clock;
    clock.clear();  // a resample opens the first episode
    std::uint64_t length = 0;
    while (lengths.size() < n_episodes) {
        ++length;
        clock.draw(gamma, rng);
        if (clock.resample_due()) {
            lengths.push_back(length);
            length = 0;
            clock.clear();
        }
    }
    return lengths;
}

}  // namespace

CheckReport check_episode_mean(double gamma, std::uint64_t n_episodes, double rel_tol, Rng& rng) {
    RunningStats stats;
    for (std::uint64_t len : clock_episode_lengths(gamma, n_episodes, rng))
        stats.add(static_cast<double>(len));
    const double expected = 1.0 / (1.0 - gamma);
    return make_report("episode_mean", n_episodes, std::abs(stats.mean() - expected) / expected,
                       rel_tol,
                       {{"mean_length", stats.mean()},
                        {"expected", expected},
                        {"std_error", stats.std_error()}});
}

CheckReport check_episode_geometric_fit(double gamma, std::uint64_t n_episodes,
                                        double significance, Rng& rng) {
    return check_geometric_fit(clock_episode_lengths(gamma, n_episodes, rng), gamma, significance);
}

CheckReport check_geometric_fit(const std::vector<std::uint64_t>& lengths, double gamma,
                                double significance) {
    if (lengths.empty()) throw std::invalid_argument("check_geometric_fit: no lengths");
    const double n = static_cast<double>(lengths.size());

    // cells 1..B individually while the expected count stays >= 5, then a tail
    std::vector<double> expected;
    double mass = 1.0;  // P(L > current bin - 1)
    for (std::uint64_t len = 1;; ++len) {
        const double p = mass * (1.0 - gamma);
        if (n * p < 5.0 || n * (mass - p) < 5.0) break;
        expected.push_back(n * p);
        mass -= p;
    }
    expected.push_back(n * mass);
    const std::size_t bins = expected.size();

    std::vector<double> observed(bins, 0.0);
    for (std::uint64_t len : lengths) {
        if (len == 0) throw std::invalid_argument("check_geometric_fit: lengths start at 1");
        observed[std::min<std::size_t>(len, bins) - 1] += 1.0;
    }

    double chi2 = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        const double d = observed[i] - expected[i];
        chi2 += d * d / expected[i];
    }
    const double df = static_cast<double>(std::max<std::size_t>(bins, 2) - 1);
    const boost::math::chi_squared_distribution<double> dist(df);
    const double critical = boost::math::quantile(boost::math::complement(dist, significance));
    return make_report("episode_geometric_fit", lengths.size(), chi2, critical,
                       {{"bins", static_cast<double>(bins)},
                        {"df", df},
                        {"p_value", boost::math::cdf(boost::math::complement(dist, chi2))}});
}

CheckReport check_episode_count(double gamma, Time horizon, std::uint64_t n_runs, Rng& rng) {
    RunningStats counts;
    for (std::uint64_t run = 0; run < n_runs; ++run) {
        ResampleClock clock;
        std::uint64_t k = 0;
        for (Time t = 1; t <= horizon; ++t) {
            if (clock.resample_due()) {
                ++k;
                clock.clear();
            }
            clock.draw(gamma, rng);
        }
        counts.add(static_cast<double>(k));
    }
    const double bound = (1.0 - gamma) * static_cast<double>(horizon) + 1.0;
    return make_report("episode_count", n_runs, counts.mean(), bound + 3.0 * counts.std_error(),
                       {{"bound", bound},
                        {"exact_expectation",
                         1.0 + (1.0 - gamma) * static_cast<double>(horizon - 1)},
                        {"std_error", counts.std_error()}});
}

CheckReport check_discounted_regret_identity(const RunConfig& config) {
    RunningStats delta, delta_tilde, difference;
    for (std::uint64_t seed : config.seeds) {
        const RunLog log = run_single(config, AgentKind::Cpsrl, seed);
        delta.add(log.sum_delta);
        delta_tilde.add(log.sum_delta_tilde);
        difference.add(log.sum_delta - log.sum_delta_tilde);
    }
    return make_report("discounted_regret_identity", config.seeds.size(),
                       std::abs(delta.mean() - delta_tilde.mean()),
                       3.0 * difference.std_error() + kNumericFloor,
                       {{"mean_sum_delta", delta.mean()},
                        {"mean_sum_delta_tilde", delta_tilde.mean()},
                        {"std_error_paired", difference.std_error()},
                        {"std_error_delta", delta.std_error()},
                        {"std_error_delta_tilde", delta_tilde.std_error()}});
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

Policy random_stochastic_policy(std::size_t S, std::size_t A, Rng& rng) {
    std::vector<double> probs(S * A);
    std::gamma_distribution<double> draw(1.0, 1.0);
    for (State s = 0; s < S; ++s) {
        double total = 0.0;
        for (Action a = 0; a < A; ++a) total += probs[s * A + a] = draw(rng);
        for (Action a = 0; a < A; ++a) probs[s * A + a] /= total;
        // exact renormalization of the last entry keeps the row sum within tolerance
        double partial = 0.0;
        for (Action a = 0; a + 1 < A; ++a) partial += probs[s * A + a];
        probs[s * A + A - 1] = 1.0 - partial;
    }
    return Policy(S, A, std::move(probs));
}

TabularMdp perturbed_copy(const TabularMdp& mdp, double weight, Rng& rng) {
    const TabularMdp other =
        make_random_dirichlet(mdp.n_states(), mdp.n_actions(), 1.0, rng);
    std::vector<double> P(mdp.transitions().size());
    for (std::size_t i = 0; i < P.size(); ++i)
        P[i] = (1.0 - weight) * mdp.transitions()[i] + weight * other.transitions()[i];
    return TabularMdp::unchecked(mdp.n_states(), mdp.n_actions(), std::move(P), mdp.rewards(),
                                 mdp.initial_state());
}

std::vector<CheckReport> suite_unbiased(std::uint64_t seed) {
    Rng rng = make_rng(seed, 101);
    const TabularMdp river = make_river_swim();
    const Policy uniform = Policy::uniform(river.n_states(), river.n_actions());
    std::vector<CheckReport> out;
    for (double gamma : {0.5, 0.9, 0.95})
        out.push_back(check_unbiased_pseudo_return(river, uniform, gamma, 100'000, rng));
    return out;
}

std::vector<CheckReport> suite_lemma1(std::uint64_t seed) {
    std::vector<CheckReport> out;
    const TabularMdp cycle = make_cycle(2, {0.0, 1.0});
    auto analytic = check_lemma1(cycle, Policy::uniform(2, 1), {0.5}, kDefaultTauHorizon);
    analytic.name = "lemma1[two_cycle]";
    out.push_back(std::move(analytic));

    Rng rng = make_rng(seed, 102);
    double worst_margin = -1e300;
    std::uint64_t failures = 0;
    constexpr int kInstances = 100;
    for (int i = 0; i < kInstances; ++i) {
        const std::size_t S = 2 + rng() % 4;
        const std::size_t A = 1 + rng() % 3;
        const TabularMdp mdp = make_random_dirichlet(S, A, 1.0, rng);
        const Policy policy = random_stochastic_policy(S, A, rng);
        const CheckReport r = check_lemma1(mdp, policy, {0.9, 0.99, 0.999}, kDefaultTauHorizon);
        worst_margin = std::max(worst_margin, r.statistic - r.threshold);
        if (!r.passed) ++failures;
    }
    out.push_back(make_report("lemma1[random_dirichlet]", kInstances, worst_margin, 0.0,
                              {{"failures", static_cast<double>(failures)}}));
    return out;
}

std::vector<CheckReport> suite_value_decomposition(std::uint64_t seed) {
    Rng rng = make_rng(seed, 103);
    const TabularMdp truth = make_random_dirichlet(3, 2, 1.0, rng);
    const TabularMdp sampled = perturbed_copy(truth, 0.5, rng);
    const Policy uniform = Policy::uniform(3, 2);
    std::vector<CheckReport> out;
    out.push_back(check_value_decomposition(truth, sampled, uniform, 0.9, 100'000, rng));
    auto same = check_value_decomposition(truth, truth, uniform, 0.9, 1'000, rng);
    same.name += "[identical]";
    out.push_back(std::move(same));
    auto myopic = check_value_decomposition(truth, sampled, uniform, 0.0, 1'000, rng);
    myopic.name += "[gamma=0]";
    out.push_back(std::move(myopic));
    return out;
}

std::vector<CheckReport> suite_posterior_sampling(std::uint64_t seed) {
    Rng rng = make_rng(seed, 104);
    const std::vector<std::pair<std::string, MdpStatistic>> statistics{
        {"rho(s1|s0,a0)", [](const TabularMdp& m) { return m.transition(0, 0, 1); }},
        {"optimal_gain", [](const TabularMdp& m) { return optimal_gain(m); }}};
    return check_posterior_sampling_property(PriorSpec{3, 2, 1.0}, statistics, {1, 5}, 10'000,
                                             1'000, 0.9, rng);
}

std::vector<CheckReport> suite_confidence(std::uint64_t seed) {
    Rng rng = make_rng(seed, 105);
    return {check_confidence_coverage(PriorSpec{4, 2, 1.0}, 0.99, 10'000, 500, rng)};
}

std::vector<CheckReport> suite_episode_cap(std::uint64_t seed) {
    Rng rng = make_rng(seed, 106);
    return {check_episode_cap(0.99, 1'000, 100'000, rng)};
}

std::vector<CheckReport> suite_episodes(std::uint64_t seed) {
    Rng rng = make_rng(seed, 107);
    return {check_episode_mean(0.99, 1'000'000, 0.01, rng),
            check_episode_geometric_fit(0.99, 1'000'000, 0.001, rng),
            check_episode_count(0.99, 10'000, 2'000, rng)};
}

std::vector<CheckReport> suite_discounted_regret(std::uint64_t seed) {
    RunConfig config;
    config.env.kind = EnvKind::RandomDirichlet;
    config.env.n_states = 3;
    config.env.n_actions = 2;
    config.schedule = ScheduleKind::Fixed;
    config.gamma = 0.9;
    config.horizon = 1'000;
    config.seeds.clear();
    for (std::uint64_t i = 0; i < 2'000; ++i) config.seeds.push_back(seed * 1'000'003 + i);
    return {check_discounted_regret_identity(config)};
}

}  // namespace

const std::vector<NamedCheck>& check_registry() {
    static const std::vector<NamedCheck> registry{
        {"unbiased_return", "pseudo-episode return is an unbiased estimate of V^gamma",
         suite_unbiased},
        {"lemma1", "|V^gamma - lambda/(1-gamma)| <= tau", suite_lemma1},
        {"value_decomposition", "value gap equals expected sum of Bellman errors",
         suite_value_decomposition},
        {"posterior_sampling", "E[g(E)] = E[g(E^k)] at resample times", suite_posterior_sampling},
        {"confidence_coverage", "P(E not in M_k) <= 1/K", suite_confidence},
        {"episode_cap", "long pseudo-episodes contribute at most 1/2", suite_episode_cap},
        {"episodes", "pseudo-episode lengths are Geometric(1-gamma); E[K] <= (1-gamma)T+1",
         suite_episodes},
        {"discounted_regret", "E[sum Delta_k] = E[sum Delta~_k] under the prior",
         suite_discounted_regret},
    };
    return registry;
}

SuiteResult run_named_check(const NamedCheck& check, std::uint64_t seed) {
    auto all_passed = [](const std::vector<CheckReport>& reports) {
        return std::all_of(reports.begin(), reports.end(),
                           [](const CheckReport& r) { return r.passed; });
    };
    SuiteResult result{check.name, check.run(seed), std::nullopt, false};
    result.passed = all_passed(result.first);
    if (!result.passed) {
        result.retry = check.run(seed + 0x9e3779b97f4a7c15ULL);
        result.passed = all_passed(*result.retry);
    }
    return result;
}

}  // namespace cpsrl
