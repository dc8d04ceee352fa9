#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpsrl/agents.hpp"
#include "cpsrl/experiment.hpp"
#include "cpsrl/mdp.hpp"

namespace cpsrl {

/// Outcome of one named verification. passed holds exactly when statistic <=
/// threshold.
struct CheckReport {
    std::string name;
    std::uint64_t samples = 0;
    double statistic = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::map<std::string, double> details;
};

CheckReport make_report(std::string name, std::uint64_t samples, double statistic,
                        double threshold, std::map<std::string, double> details = {});

/// Independent Dirichlet(alpha) rows for every (s, a); rewards on the grid
/// used by make_random_dirichlet.
struct PriorSpec {
    std::size_t n_states = 3;
    std::size_t n_actions = 2;
    double alpha = 1.0;
};

using MdpStatistic = std::function<double(const TabularMdp&)>;

/// Undiscounted return over Geometric(1 - gamma)-length rollouts from the
/// initial state against V^gamma_pi(s0); passes within 3 standard errors.
CheckReport check_unbiased_pseudo_return(const TabularMdp& mdp, const Policy& policy, double gamma,
                                         std::uint64_t n_episodes, Rng& rng);

/// max_s |V^gamma_pi(s) - lambda_pi(s)/(1-gamma)| <= tau_hat(t_max) + 1e-6 for
/// every listed gamma.
CheckReport check_lemma1(const TabularMdp& mdp, const Policy& policy,
                         const std::vector<double>& gammas, long long t_max);

/// Monte Carlo estimate of E[sum_{t<eta} gamma <P_{a_t s_t} - Phat_{a_t s_t}, Vhat>]
/// along trajectories in true_mdp, against V_true(s0) - Vhat(s0).
CheckReport check_value_decomposition(const TabularMdp& true_mdp, const TabularMdp& sampled_mdp,
                                      const Policy& policy, double gamma,
                                      std::uint64_t n_episodes, Rng& rng);

/// Mean of g(E) against mean of g(E^k) at the k-th resample of CPSRL, true
/// environments drawn from the agent's prior. One report per (statistic, k).
std::vector<CheckReport> check_posterior_sampling_property(
    const PriorSpec& prior, const std::vector<std::pair<std::string, MdpStatistic>>& statistics,
    const std::vector<std::uint64_t>& episodes, std::uint64_t n_runs, Time horizon, double gamma,
    Rng& rng);

/// Frequency of E outside M_k over all (run, k) pairs of prior-matched CPSRL
/// runs, against 1/Khat + 3 SE. radius_override replaces every beta_k.
CheckReport check_confidence_coverage(const PriorSpec& prior, double gamma, Time horizon,
                                      std::uint64_t n_runs, Rng& rng,
                                      std::optional<double> radius_override = std::nullopt);

/// m = log(2K/(1-gamma)) / (1-gamma).
double episode_length_cap(double gamma, std::uint64_t big_k);

/// E[sum_k 1{|E_k| > m}] / (1 - gamma) <= 1/2 (+3 SE), from simulated lengths.
CheckReport check_episode_cap(double gamma, std::uint64_t big_k, std::uint64_t n_trials, Rng& rng);

/// Pseudo-episode lengths produced by the resampling clock: mean within
/// rel_tol of 1/(1-gamma).
CheckReport check_episode_mean(double gamma, std::uint64_t n_episodes, double rel_tol, Rng& rng);

/// Chi-square goodness of fit of clock-produced lengths to Geometric(1-gamma).
CheckReport check_episode_geometric_fit(double gamma, std::uint64_t n_episodes,
                                        double significance, Rng& rng);

/// Chi-square goodness of fit of the given lengths (>= 1) to Geometric(1-gamma).
CheckReport check_geometric_fit(const std::vector<std::uint64_t>& lengths, double gamma,
                                double significance);

/// Mean realized K over horizon against (1 - gamma) T + 1 + 3 SE.
CheckReport check_episode_count(double gamma, Time horizon, std::uint64_t n_runs, Rng& rng);

/// Mean sum of Delta_k against mean sum of Delta~_k over config.seeds
/// (CPSRL, prior-matched environments); passes within 3 paired SE.
CheckReport check_discounted_regret_identity(const RunConfig& config);

/// Draws one length of a pseudo-episode with survival probability gamma.
std::uint64_t draw_episode_length(double gamma, Rng& rng);

// ---------------------------------------------------------------------------
// Named suite used by `verify`
// ---------------------------------------------------------------------------

struct NamedCheck {
    std::string name;
    std::string description;
    std::function<std::vector<CheckReport>(std::uint64_t seed)> run;
};

const std::vector<NamedCheck>& check_registry();

struct SuiteResult {
    std::string name;
    std::vector<CheckReport> first;
    /// Present when the first attempt failed and the check was retried.
    std::optional<std::vector<CheckReport>> retry;
    bool passed = false;
};

/// Runs one registered check; a failed attempt is retried once with a fresh
/// seed and both outcomes are kept.
SuiteResult run_named_check(const NamedCheck& check, std::uint64_t seed);

}  // namespace cpsrl
