#include "cpsrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace cpsrl {

namespace {

void reject_unknown(const YAML::Node& node, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& item : node) {
        const auto key = item.first.as<std::string>();
        if (!known.contains(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read_if(const YAML::Node& node, const char* key, T& out) {
    if (node[key]) out = node[key].as<T>();
}

void read_env(const YAML::Node& node, EnvSpec& env) {
    if (node.IsScalar()) {
        env.kind = parse_env_kind(node.as<std::string>());
        return;
    }
    reject_unknown(node,
                   {"kind", "n", "p_right", "p_back", "r_left", "r_right", "n_states", "n_actions",
                    "alpha", "rewards", "stay"},
                   "env");
    if (node["kind"]) env.kind = parse_env_kind(node["kind"].as<std::string>());
    read_if(node, "n", env.river_swim.n);
    read_if(node, "p_right", env.river_swim.p_right);
    read_if(node, "p_back", env.river_swim.p_back);
    read_if(node, "r_left", env.river_swim.r_left);
    read_if(node, "r_right", env.river_swim.r_right);
    read_if(node, "n_states", env.n_states);
    read_if(node, "n_actions", env.n_actions);
    read_if(node, "alpha", env.alpha);
    read_if(node, "rewards", env.cycle_rewards);
    read_if(node, "stay", env.cycle_stay);
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream stream(text);
    std::string item;
    try {
        while (std::getline(stream, item, ',')) {
            if (item.empty()) continue;
            const auto dash = item.find('-');
            if (dash == std::string::npos) {
                seeds.push_back(std::stoull(item));
                continue;
            }
            const std::uint64_t lo = std::stoull(item.substr(0, dash));
            const std::uint64_t hi = std::stoull(item.substr(dash + 1));
            if (hi < lo) throw ConfigError("empty seed range '" + item + "'");
            for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        }
    } catch (const std::logic_error&) {
        throw ConfigError("malformed seed list '" + text + "'");
    }
    if (seeds.empty()) throw ConfigError("seed list is empty");
    return seeds;
}

std::vector<AgentKind> parse_agent_list(const std::string& text) {
    std::vector<AgentKind> agents;
    std::stringstream stream(text);
    std::string item;
    try {
        while (std::getline(stream, item, ','))
            if (!item.empty()) agents.push_back(parse_agent_kind(item));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (agents.empty()) throw ConfigError("agent list is empty");
    return agents;
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    try {
        const YAML::Node root = YAML::Load(text);
        if (!root || root.IsNull()) return config;
        if (!root.IsMap()) throw ConfigError("config must be a mapping");
        reject_unknown(root,
                       {"env", "agent", "agents", "schedule", "gamma", "horizon", "seeds", "output",
                        "log_every", "prior_alpha", "planner_tol", "doubling_base_length",
                        "resample_at_schedule_boundary", "write_steps"},
                       "config");

        if (root["env"]) read_env(root["env"], config.env);

        for (const char* key : {"agent", "agents"}) {
            const YAML::Node node = root[key];
            if (!node) continue;
            config.agents.clear();
            if (node.IsSequence()) {
                for (const auto& item : node)
                    config.agents.push_back(parse_agent_kind(item.as<std::string>()));
            } else {
                config.agents = parse_agent_list(node.as<std::string>());
            }
        }

        if (const YAML::Node node = root["schedule"]) {
            if (node.IsMap()) {
                reject_unknown(node, {"kind", "gamma"}, "schedule");
                if (node["kind"]) config.schedule = parse_schedule_kind(node["kind"].as<std::string>());
                read_if(node, "gamma", config.gamma);
            } else {
                config.schedule = parse_schedule_kind(node.as<std::string>());
            }
        }
        read_if(root, "gamma", config.gamma);
        read_if(root, "horizon", config.horizon);

        if (const YAML::Node node = root["seeds"]) {
            if (node.IsSequence()) {
                config.seeds = node.as<std::vector<std::uint64_t>>();
            } else {
                config.seeds = parse_seed_list(node.as<std::string>());
            }
        }
        if (root["output"]) config.output_dir = root["output"].as<std::string>();
        read_if(root, "log_every", config.log_every);
        read_if(root, "prior_alpha", config.prior_alpha);
        read_if(root, "planner_tol", config.planner_tol);
        read_if(root, "doubling_base_length", config.doubling_base_length);
        read_if(root, "resample_at_schedule_boundary", config.resample_at_schedule_boundary);
        read_if(root, "write_steps", config.write_steps);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace cpsrl
