// Command-line front end: run experiments, verify diagnostics, plot curves.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cpsrl/config.hpp"
#include "cpsrl/diagnostics.hpp"
#include "cpsrl/experiment.hpp"
#include "cpsrl/output.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRun = 2;
constexpr int kExitVerify = 3;

struct RunArgs {
    std::string config_path;
    std::optional<std::string> seeds;
    std::optional<cpsrl::Time> horizon;
    std::optional<std::string> out;
    std::optional<std::string> agent;
    std::optional<double> gamma;
    std::optional<std::string> schedule;
};

int do_run(const RunArgs& args) {
    cpsrl::RunConfig config;
    try {
        config = cpsrl::load_config(args.config_path);
        if (args.seeds) config.seeds = cpsrl::parse_seed_list(*args.seeds);
        if (args.horizon) config.horizon = *args.horizon;
        if (args.out) config.output_dir = *args.out;
        if (args.agent) config.agents = cpsrl::parse_agent_list(*args.agent);
        if (args.gamma) config.gamma = *args.gamma;
        if (args.schedule) config.schedule = cpsrl::parse_schedule_kind(*args.schedule);
        cpsrl::validate(config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        const cpsrl::BatchResult result = cpsrl::run_batch(config);
        for (const auto& batch : result.agents) {
            const auto& last = batch.aggregate.back();
            std::printf("%-10s T=%llu  regret %.3f +- %.3f  (n=%zu)\n",
                        cpsrl::to_string(batch.agent).c_str(),
                        static_cast<unsigned long long>(last.t), last.mean, last.std_error,
                        last.n);
        }
        std::printf("wrote %zu files to %s\n", result.files.size(),
                    config.output_dir.string().c_str());
    } catch (const std::exception& e) {
        std::cerr << "run error: " << e.what() << '\n';
        return kExitRun;
    }
    return kExitOk;
}

void print_reports(const std::vector<cpsrl::CheckReport>& reports, const char* tag) {
    for (const auto& r : reports) {
        std::printf("  %-4s %-44s stat=%-12.6g thr=%-12.6g n=%llu%s\n", r.passed ? "ok" : "FAIL",
                    r.name.c_str(), r.statistic, r.threshold,
                    static_cast<unsigned long long>(r.samples), tag);
    }
}

nlohmann::ordered_json reports_json(const std::vector<cpsrl::CheckReport>& reports) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& r : reports)
        out.push_back({{"name", r.name},
                       {"samples", r.samples},
                       {"statistic", r.statistic},
                       {"threshold", r.threshold},
                       {"passed", r.passed},
                       {"details", r.details}});
    return out;
}

int do_verify(const std::vector<std::string>& names, bool all, std::uint64_t seed,
              const std::string& report_path) {
    const auto& registry = cpsrl::check_registry();
    std::vector<const cpsrl::NamedCheck*> selected;
    if (all || names.empty()) {
        for (const auto& c : registry) selected.push_back(&c);
    } else {
        for (const auto& name : names) {
            const cpsrl::NamedCheck* found = nullptr;
            for (const auto& c : registry)
                if (c.name == name) found = &c;
            if (!found) {
                std::cerr << "unknown check '" << name << "'; valid names:";
                for (const auto& c : registry) std::cerr << ' ' << c.name;
                std::cerr << '\n';
                return kExitConfig;
            }
            selected.push_back(found);
        }
    }

    bool all_passed = true;
    auto doc = nlohmann::ordered_json::array();
    for (const auto* check : selected) {
        std::printf("%s: %s\n", check->name.c_str(), check->description.c_str());
        std::fflush(stdout);
        const cpsrl::SuiteResult result = cpsrl::run_named_check(*check, seed);
        print_reports(result.first, "");
        if (result.retry) print_reports(*result.retry, "  (retry)");
        std::printf("  => %s\n", result.passed ? "PASS" : "FAIL");
        all_passed = all_passed && result.passed;
        nlohmann::ordered_json entry{{"name", result.name},
                                     {"passed", result.passed},
                                     {"first", reports_json(result.first)}};
        if (result.retry) entry["retry"] = reports_json(*result.retry);
        doc.push_back(std::move(entry));
    }
    if (!report_path.empty()) std::ofstream(report_path) << doc.dump(2) << '\n';
    return all_passed ? kExitOk : kExitVerify;
}

int do_plot(const std::vector<std::string>& inputs, const std::string& out_path) {
    std::vector<cpsrl::PlotSeries> series;
    try {
        for (const auto& input : inputs) {
            std::string label = std::filesystem::path(input).stem().string();
            if (const auto pos = label.rfind("_aggregate"); pos != std::string::npos)
                label.erase(pos);
            series.push_back({label, cpsrl::read_aggregate_csv(input)});
        }
    } catch (const std::exception& e) {
        std::cerr << "plot error: " << e.what() << '\n';
        return kExitConfig;
    }
    std::ofstream(out_path) << cpsrl::render_regret_svg(series, "cumulative regret");
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuing posterior sampling workbench"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run an experiment defined by a YAML config");
    run->add_option("config", run_args.config_path, "experiment config file")->required();
    run->add_option("--seeds", run_args.seeds, "seed list, e.g. 1-20 or 1,4,9");
    run->add_option("--horizon", run_args.horizon, "number of steps T");
    run->add_option("--out", run_args.out, "output directory");
    run->add_option("--agent", run_args.agent, "cpsrl, tsde, doubling, random (comma list)");
    run->add_option("--gamma", run_args.gamma, "discount for the fixed schedule");
    run->add_option("--schedule", run_args.schedule, "fixed, horizon_tuned or doubling_trick");

    std::vector<std::string> check_names;
    bool verify_all = false;
    std::uint64_t verify_seed = 1;
    std::string verify_report;
    auto* verify = app.add_subcommand("verify", "run named diagnostic checks");
    verify->add_option("names", check_names, "checks to run");
    verify->add_flag("--all", verify_all, "run every check");
    verify->add_option("--seed", verify_seed, "base seed");
    verify->add_option("--report", verify_report, "write a JSON report here");

    std::vector<std::string> plot_inputs;
    std::string plot_out = "regret.svg";
    auto* plot = app.add_subcommand("plot", "plot aggregate regret CSVs as SVG");
    plot->add_option("aggregates", plot_inputs, "aggregate CSV files")->required();
    plot->add_option("--out", plot_out, "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*run) return do_run(run_args);
    if (*verify) return do_verify(check_names, verify_all, verify_seed, verify_report);
    if (*plot) return do_plot(plot_inputs, plot_out);
    return kExitConfig;
}
