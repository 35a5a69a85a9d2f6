#pragma once

#include "grasp/train/trainer.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace grasp::config {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct KeySpec {
    std::string key;
    std::string default_value;
    std::string help;
};

// Every accepted key with its default, in display order.
const std::vector<KeySpec>& known_keys();
bool is_known(const std::string& key);

// key -> raw string value
using Values = std::map<std::string, std::string>;

Values defaults();

// Parses "key = value" lines; '#' starts a comment. Unknown and duplicate
// keys are errors reported with `source:line`.
Values parse_text(const std::string& text, const std::string& source = "<text>");
Values load_file(const std::filesystem::path& path);

// Overlays `overrides` onto `base`; every key must be known.
void merge(Values& base, const Values& overrides);

// Environment variable that overrides `key`: GRASP_ + key upper-cased with
// dots replaced by underscores, e.g. plan.tau -> GRASP_PLAN_TAU.
std::string env_name(const std::string& key);
// Applies GRASP_* overrides found through `lookup` (getenv by default) and
// returns the keys that were overridden.
std::vector<std::string> apply_env_overrides(
    Values& values, const std::function<std::optional<std::string>(const std::string&)>& lookup = {});

struct ExperimentConfig {
    train::TrainConfig train;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir;
    std::string name;
};

// Typed conversion and validation; errors name the offending key.
ExperimentConfig resolve(const Values& values);

// "key = value" lines in known_keys() order, parseable by parse_text.
std::string to_text(const Values& values);
// Aligned table for --dry-run, marking values that differ from defaults.
std::string render_table(const Values& values, const std::vector<std::string>& env_overridden = {});

// Short agent label such as "SA-3", "UCT-50" or "RND GA-4".
std::string agent_label(const train::TrainConfig& config);

}  // namespace grasp::config
