#include "grasp/config/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace grasp::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const Values& v, const std::string& key) {
    const std::string& raw = v.at(key);
    try {
        std::size_t used = 0;
        const double x = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + raw + "'");
    }
}

std::size_t to_size(const Values& v, const std::string& key) {
    const std::string& raw = v.at(key);
    try {
        std::size_t used = 0;
        if (!raw.empty() && raw[0] == '-') throw std::invalid_argument("negative");
        const unsigned long long x = std::stoull(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing");
        return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + raw + "'");
    }
}

bool to_bool(const Values& v, const std::string& key) {
    const std::string& raw = v.at(key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + raw + "'");
}

std::vector<std::uint64_t> to_seeds(const Values& v, const std::string& key) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(v.at(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError(key + ": expected a comma-separated list of integers, got '" + v.at(key) + "'");
        }
    }
    if (out.empty()) throw ConfigError(key + ": at least one seed is required");
    return out;
}

}  // namespace

const std::vector<KeySpec>& known_keys() {
    static const std::vector<KeySpec> keys{
        {"env.id", "collect", "collect | point_mass | reach_goal"},
        {"env.collect_step", "0.05", "Collect move length and collect radius"},
        {"train.gamma", "0.99", "discount"},
        {"afford.variant", "GA", "GA | SA | A"},
        {"afford.K", "4", "number of affordance heads"},
        {"afford.lr", "0.001", "affordance Adam learning rate"},
        {"afford.frozen", "false", "keep affordances at their random init (RND ablation)"},
        {"afford.hidden", "512", "affordance trunk width"},
        {"model.state_dim", "64", "abstract state size"},
        {"model.hidden", "512", "hidden width of every model network"},
        {"model.lr", "0.0001", "model Adam learning rate"},
        {"model.unroll_len", "5", "segment length n for the model loss"},
        {"plan.mode", "complete", "complete | uct"},
        {"plan.depth", "2", "lookahead depth D"},
        {"plan.K", "", "must equal afford.K when set"},
        {"plan.tau", "1", "softmax temperature"},
        {"plan.uct_trajectories", "50", "UCT trajectories H"},
        {"plan.c1", "1.25", "pUCT c1"},
        {"plan.c2", "19652", "pUCT c2"},
        {"plan.node_budget", "4096", "largest tree a plan may build"},
        {"target.sync_period", "1000", "learner updates between hard target syncs"},
        {"replay.capacity", "200000", "replay buffer size"},
        {"train.batch", "32", "segments per learner update"},
        {"train.warmup", "1000", "transitions before learning starts"},
        {"train.steps", "100000", "environment steps (options in option environments)"},
        {"train.update_every", "1", "environment steps per learner update"},
        {"train.warmup_random", "true", "act uniformly at random during warmup"},
        {"train.explore_noise", "0", "Gaussian noise std on executed actions"},
        {"train.explore_random", "0", "probability of a uniform random action while training"},
        {"train.log_interval", "1000", "steps per metrics row"},
        {"train.eval_interval", "2000", "steps between evaluations"},
        {"train.eval_episodes", "10", "episodes per evaluation"},
        {"train.eval_greedy", "true", "argmax root policy during evaluation"},
        {"train.checkpoint_interval", "0", "steps between checkpoints (0: final only)"},
        {"train.stop_success", "0", "stop once an evaluation reaches this success rate (0: never)"},
        {"train.cpu_budget", "0", "stop at the first log row past this many CPU seconds (0: never)"},
        {"run.seeds", "1,2,3,4,5", "comma-separated seeds"},
        {"run.out_dir", "runs/default", "output directory"},
        {"run.name", "", "agent label for plots (derived when empty)"},
    };
    return keys;
}

bool is_known(const std::string& key) {
    const auto& keys = known_keys();
    return std::any_of(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.key == key; });
}

Values defaults() {
    Values v;
    for (const auto& k : known_keys()) v[k.key] = k.default_value;
    return v;
}

Values parse_text(const std::string& text, const std::string& source) {
    Values out;
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
        ++number;
        const std::string where = source + ":" + std::to_string(number);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!is_known(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        if (out.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        out[key] = value;
    }
    return out;
}

Values load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path.string());
}

void merge(Values& base, const Values& overrides) {
    for (const auto& [k, v] : overrides) {
        if (!is_known(k)) throw ConfigError("unknown key '" + k + "'");
        base[k] = v;
    }
}

std::string env_name(const std::string& key) {
    std::string out = "GRASP_";
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> apply_env_overrides(
    Values& values, const std::function<std::optional<std::string>(const std::string&)>& lookup) {
    auto get = lookup ? lookup : [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
    std::vector<std::string> changed;
    for (const auto& k : known_keys()) {
        if (auto v = get(env_name(k.key))) {
            values[k.key] = trim(*v);
            changed.push_back(k.key);
        }
    }
    return changed;
}

ExperimentConfig resolve(const Values& given) {
    Values v = defaults();
    merge(v, given);
    ExperimentConfig out;
    train::TrainConfig& t = out.train;
    t.env = v.at("env.id");
    t.collect_step = to_double(v, "env.collect_step");
    t.gamma = to_double(v, "train.gamma");
    try {
        t.variant = affordance::parse_variant(v.at("afford.variant"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("afford.variant: ") + e.what());
    }
    t.heads = to_size(v, "afford.K");
    t.afford_lr = to_double(v, "afford.lr");
    t.frozen = to_bool(v, "afford.frozen");
    t.afford_hidden = to_size(v, "afford.hidden");
    t.state_dim = to_size(v, "model.state_dim");
    t.hidden = to_size(v, "model.hidden");
    t.model_lr = to_double(v, "model.lr");
    t.unroll = to_size(v, "model.unroll_len");
    try {
        t.plan.mode = planner::parse_mode(v.at("plan.mode"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("plan.mode: ") + e.what());
    }
    t.plan.depth = to_size(v, "plan.depth");
    if (!v.at("plan.K").empty() && to_size(v, "plan.K") != t.heads) {
        throw ConfigError("plan.K: " + v.at("plan.K") + " differs from afford.K = " + v.at("afford.K"));
    }
    t.plan.tau = to_double(v, "plan.tau");
    t.plan.trajectories = to_size(v, "plan.uct_trajectories");
    t.plan.c1 = to_double(v, "plan.c1");
    t.plan.c2 = to_double(v, "plan.c2");
    t.plan.node_budget = to_size(v, "plan.node_budget");
    t.plan.gamma = t.gamma;
    t.sync_period = to_size(v, "target.sync_period");
    t.capacity = to_size(v, "replay.capacity");
    t.batch = to_size(v, "train.batch");
    t.warmup = to_size(v, "train.warmup");
    t.steps = to_size(v, "train.steps");
    t.update_every = to_size(v, "train.update_every");
    t.warmup_random = to_bool(v, "train.warmup_random");
    t.explore_noise = to_double(v, "train.explore_noise");
    t.explore_random = to_double(v, "train.explore_random");
    t.log_interval = to_size(v, "train.log_interval");
    t.eval_interval = to_size(v, "train.eval_interval");
    t.eval_episodes = to_size(v, "train.eval_episodes");
    t.eval_greedy = to_bool(v, "train.eval_greedy");
    t.checkpoint_interval = to_size(v, "train.checkpoint_interval");
    t.stop_success = to_double(v, "train.stop_success");
    t.cpu_budget = to_double(v, "train.cpu_budget");
    try {
        train::validate(t);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    out.seeds = to_seeds(v, "run.seeds");
    out.out_dir = v.at("run.out_dir");
    if (out.out_dir.empty()) throw ConfigError("run.out_dir: must not be empty");
    out.name = v.at("run.name").empty() ? agent_label(t) : v.at("run.name");
    return out;
}

std::string to_text(const Values& values) {
    Values v = defaults();
    merge(v, values);
    std::string out;
    for (const auto& k : known_keys()) out += k.key + " = " + v.at(k.key) + "\n";
    return out;
}

std::string render_table(const Values& values, const std::vector<std::string>& env_overridden) {
    Values v = defaults();
    merge(v, values);
    std::size_t width = 0;
    for (const auto& k : known_keys()) width = std::max(width, k.key.size());
    std::string out;
    for (const auto& k : known_keys()) {
        std::string line = k.key + std::string(width - k.key.size() + 2, ' ') + v.at(k.key);
        const bool from_env = std::find(env_overridden.begin(), env_overridden.end(), k.key) != env_overridden.end();
        if (from_env) {
            line += "   (" + env_name(k.key) + ")";
        } else if (v.at(k.key) != k.default_value) {
            line += "   (set)";
        }
        out += line + "\n";
    }
    return out;
}

std::string agent_label(const train::TrainConfig& c) {
    std::string label;
    if (c.plan.mode == planner::Mode::uct) {
        label = "UCT-" + std::to_string(c.plan.trajectories);
    } else {
        label = affordance::variant_name(c.variant) + "-" + std::to_string(c.heads);
    }
    return c.frozen ? "RND " + label : label;
}

}  // namespace grasp::config
