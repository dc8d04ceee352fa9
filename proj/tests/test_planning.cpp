#include <doctest.h>

#include <cmath>
#include <vector>

#include "cpsrl/env_suite.hpp"
#include "cpsrl/planning.hpp"

using namespace cpsrl;

namespace {

// Enumerates every deterministic policy of an S-state, A-action MDP.
template <class Fn>
void for_each_deterministic(std::size_t S, std::size_t A, Fn&& fn) {
    std::vector<Action> choice(S, 0);
    for (;;) {
        fn(Policy::deterministic(A, choice));
        std::size_t i = 0;
        while (i < S && ++choice[i] == A) choice[i++] = 0;
        if (i == S) return;
    }
}

// Plain fixed-point iteration of V = r + gamma P V, independent of the LU path.
Eigen::VectorXd iterate_value(const TabularMdp& mdp, const Policy& pi, double gamma) {
    const Eigen::MatrixXd P = policy_transition_matrix(mdp, pi);
    const Eigen::VectorXd r = policy_reward_vector(mdp, pi);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(r.size());
    for (int i = 0; i < 5000; ++i) v = r + gamma * P * v;
    return v;
}

TabularMdp small_mdp() {
    return TabularMdp(2, 2, {0.9, 0.1, 0.3, 0.7, 0.2, 0.8, 0.6, 0.4}, {0.1, 0.9, 0.5, 0.0});
}

}  // namespace

TEST_CASE("discounted evaluation closed forms") {
    TabularMdp one(1, 1, {1.0}, {1.0});
    CHECK(evaluate_discounted(one, Policy::uniform(1, 1), 0.9).v(0) == doctest::Approx(10.0));

    const TabularMdp mdp = small_mdp();
    const Policy mixed(2, 2, {0.3, 0.7, 0.6, 0.4});
    const auto at_zero = evaluate_discounted(mdp, mixed, 0.0);
    const Eigen::VectorXd r = policy_reward_vector(mdp, mixed);
    CHECK(at_zero.v(0) == r(0));
    CHECK(at_zero.v(1) == r(1));

    // v0 = 0.5 v1, v1 = 1 + 0.5 v0
    const TabularMdp cycle = make_cycle(2, {0.0, 1.0});
    const auto v = evaluate_discounted(cycle, Policy::uniform(2, 1), 0.5).v;
    CHECK(v(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(v(1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate_discounted(one, Policy::uniform(1, 1), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_discounted(one, Policy::uniform(1, 1), -0.1), std::invalid_argument);
}

TEST_CASE("evaluation agrees with plain iteration on random instances") {
    Rng rng = make_rng(17);
    for (int i = 0; i < 50; ++i) {
        const TabularMdp mdp = make_random_dirichlet(2 + rng() % 5, 1 + rng() % 3, 0.5, rng);
        const Policy pi = Policy::uniform(mdp.n_states(), mdp.n_actions());
        const auto report = evaluate_discounted(mdp, pi, 0.95);
        CHECK((report.v - iterate_value(mdp, pi, 0.95)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(report.residual <= 1e-10);
    }
}

TEST_CASE("myopic solve at gamma zero") {
    const TabularMdp mdp = small_mdp();
    const auto report = solve_discounted(mdp, 0.0);
    CHECK(report.v(0) == 0.9);
    CHECK(report.v(1) == 0.5);
    CHECK(report.policy.deterministic_action(0) == 1);
    CHECK(report.policy.deterministic_action(1) == 0);
}

TEST_CASE("solve matches brute force over deterministic policies") {
    Rng rng = make_rng(99);
    std::vector<TabularMdp> instances{small_mdp(), make_river_swim()};
    for (int i = 0; i < 30; ++i)
        instances.push_back(make_random_dirichlet(2 + rng() % 3, 2 + rng() % 2, 1.0, rng));
    for (const TabularMdp& mdp : instances) {
        for (double gamma : {0.5, 0.9, 0.99}) {
            Eigen::VectorXd best = Eigen::VectorXd::Constant(mdp.n_states(), -1.0);
            for_each_deterministic(mdp.n_states(), mdp.n_actions(), [&](const Policy& pi) {
                best = best.cwiseMax(evaluate_discounted(mdp, pi, gamma).v);
            });
            const auto solved = solve_discounted(mdp, gamma);
            CHECK((solved.v - best).cwiseAbs().maxCoeff() < 1e-6);
            const auto greedy = evaluate_discounted(mdp, solved.policy, gamma).v;
            CHECK((greedy - best).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("greedy ties go to the lowest action") {
    TabularMdp tie(1, 3, {1.0, 1.0, 1.0}, {0.5, 0.5, 0.5});
    CHECK(solve_discounted(tie, 0.9).policy.deterministic_action(0) == 0);
}

TEST_CASE("limiting matrix of periodic and absorbing chains") {
    Eigen::MatrixXd flip(2, 2);
    flip << 0, 1, 1, 0;
    const Eigen::MatrixXd star = limiting_matrix(flip);
    CHECK((star.array() - 0.5).abs().maxCoeff() < 1e-12);

    Eigen::MatrixXd three_cycle(3, 3);
    three_cycle << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    CHECK((limiting_matrix(three_cycle).array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);

    // two absorbing states; the middle state splits evenly
    Eigen::MatrixXd split(3, 3);
    split << 1, 0, 0, 0.25, 0.5, 0.25, 0, 0, 1;
    const Eigen::MatrixXd s = limiting_matrix(split);
    CHECK(s(1, 0) == doctest::Approx(0.5));
    CHECK(s(1, 2) == doctest::Approx(0.5));
    CHECK(s(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("average reward closed forms") {
    const auto cycle_gain = average_reward(make_cycle(2, {0.0, 1.0}), Policy::uniform(2, 1));
    CHECK(cycle_gain(0) == doctest::Approx(0.5));
    CHECK(cycle_gain(1) == doctest::Approx(0.5));

    // state 2 absorbing with reward 1
    TabularMdp absorbing(3, 1, {0.5, 0.5, 0.0, 0.0, 0.2, 0.8, 0.0, 0.0, 1.0}, {0.0, 0.3, 1.0});
    const auto g = average_reward(absorbing, Policy::uniform(3, 1));
    for (int s = 0; s < 3; ++s) CHECK(g(s) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("average reward matches a long simulated running average") {
    Rng rng = make_rng(2718);
    const TabularMdp mdp = make_random_dirichlet(4, 2, 1.0, rng);
    const Policy pi(4, 2, {0.3, 0.7, 0.5, 0.5, 0.9, 0.1, 0.2, 0.8});
    const double lambda = average_reward(mdp, pi)(0);
    State s = 0;
    double total = 0.0;
    constexpr int n = 10'000'000;
    for (int t = 0; t < n; ++t) {
        const StepResult next = step(mdp, s, pi.sample(s, rng), rng);
        total += next.reward;
        s = next.next_state;
    }
    CHECK(std::abs(total / n - lambda) < 1e-3);
}

TEST_CASE("optimal gain oracles") {
    TabularMdp flat(2, 2, {0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.3, 0.7}, {0.4, 0.4, 0.4, 0.4});
    CHECK(optimal_gain(flat) == doctest::Approx(0.4).epsilon(1e-9));

    Rng rng = make_rng(5);
    std::vector<TabularMdp> instances{small_mdp()};
    for (int i = 0; i < 20; ++i) instances.push_back(make_random_dirichlet(2, 2, 1.0, rng));
    for (int i = 0; i < 10; ++i) instances.push_back(make_random_dirichlet(4, 3, 0.3, rng));
    for (const TabularMdp& mdp : instances) {
        double best = -1.0;
        for_each_deterministic(mdp.n_states(), mdp.n_actions(), [&](const Policy& pi) {
            best = std::max(best, average_reward(mdp, pi)(mdp.initial_state()));
        });
        CHECK(optimal_gain(mdp) == doctest::Approx(best).epsilon(1e-8));
    }

    const TabularMdp river = make_river_swim();
    const double right = average_reward(river, Policy::deterministic(2, std::vector<Action>(6, 1)))(0);
    CHECK(std::abs(optimal_gain(river) - right) < 1e-6);

    // periodic optimal cycle still resolves
    CHECK(optimal_gain(make_cycle(2, {0.0, 1.0}, true)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("optimal gain refuses multichain input") {
    TabularMdp split(2, 1, {1.0, 0.0, 0.0, 1.0}, {0.0, 1.0});
    CHECK_THROWS_AS(optimal_gain(split, 1e-10, 2'000), ConvergenceError);
}

TEST_CASE("reward averaging time") {
    const TabularMdp cycle = make_cycle(2, {0.0, 1.0});
    const auto report = reward_averaging_time(cycle, Policy::uniform(2, 1), 10'000);
    CHECK(report.tau_hat == doctest::Approx(0.5).epsilon(1e-9));
    REQUIRE(report.lambda_opt.has_value());
    CHECK(*report.lambda_opt == doctest::Approx(0.5));

    // identical rows and constant reward: partial sums are exactly T c
    TabularMdp iid(3, 1, {0.2, 0.3, 0.5, 0.2, 0.3, 0.5, 0.2, 0.3, 0.5}, {0.7, 0.7, 0.7});
    CHECK(reward_averaging_time(iid, Policy::uniform(3, 1), 1'000).tau_hat < 1e-9);

    CHECK(reward_averaging_time(cycle, Policy::uniform(2, 1), 0).tau_hat == 0.0);
    CHECK_THROWS_AS(reward_averaging_time(cycle, Policy::uniform(2, 1), -1),
                    std::invalid_argument);
}

TEST_CASE("span") {
    CHECK(span(Eigen::VectorXd::Constant(4, 2.5)) == 0.0);
    Eigen::VectorXd v(3);
    v << 1, 4, 2;
    CHECK(span(v) == 3.0);
    CHECK_THROWS(span(Eigen::VectorXd()));
}

TEST_CASE("span of V* is bounded by twice the averaging time of the optimal policy") {
    Rng rng = make_rng(31);
    for (int i = 0; i < 20; ++i) {
        const TabularMdp mdp = make_random_dirichlet(3, 2, 1.0, rng);
        for (double gamma : {0.9, 0.99}) {
            const auto solved = solve_discounted(mdp, gamma, 1e-10);
            const double tau = reward_averaging_time(mdp, solved.policy, 10'000).tau_hat;
            CHECK(span(solved.v) <= 2.0 * tau + 1e-6);
        }
    }
}
