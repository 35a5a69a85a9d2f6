#pragma once

#include "grasp/autodiff/adam.hpp"
#include "grasp/env/environment.hpp"
#include "grasp/planner/planner.hpp"
#include "grasp/train/replay.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>

namespace grasp::train {

using ad::Graph;
using ad::Var;

struct TrainConfig {
    std::string env = "collect";
    double gamma = 0.99;
    double collect_step = 0.05;

    affordance::Variant variant = affordance::Variant::goal_state;
    std::size_t heads = 4;
    bool frozen = false;
    std::size_t afford_hidden = 512;
    double afford_lr = 1e-3;

    std::size_t state_dim = 64;
    std::size_t hidden = 512;
    double model_lr = 1e-4;
    std::size_t unroll = 5;

    planner::PlannerConfig plan;

    std::size_t sync_period = 1000;
    std::size_t capacity = 200000;
    std::size_t batch = 32;
    std::size_t warmup = 1000;
    std::size_t steps = 100000;
    std::size_t update_every = 1;
    // Uniform random actions until the warmup fills the buffer.
    bool warmup_random = true;
    // Std of Gaussian noise added to the executed action while training.
    double explore_noise = 0.0;
    // Probability of a uniform random action instead of the planner's while
    // training.
    double explore_random = 0.0;

    std::size_t log_interval = 1000;
    std::size_t eval_interval = 2000;
    std::size_t eval_episodes = 10;
    bool eval_greedy = true;
    std::size_t checkpoint_interval = 0;
    // When positive, training ends after an evaluation reaching this success rate.
    double stop_success = 0.0;
    // When positive, training ends at the first log row after this many
    // seconds of thread CPU time. Runs cut short this way are not reproducible.
    double cpu_budget = 0.0;
};

// Throws std::invalid_argument naming the offending field.
void validate(const TrainConfig& config);

struct EvalResult {
    double mean_return = 0.0;
    double success_rate = 0.0;
    double mean_length = 0.0;
};

struct MetricsRow {
    std::size_t step = 0;
    double episode_return = 0.0;
    double episode_len = 0.0;
    double episode_success = 0.0;
    double model_loss = 0.0;
    double value_loss = 0.0;
    double reward_loss = 0.0;
    double afford_objective = 0.0;
    double root_value = 0.0;
    std::vector<double> head_frac;
    double eval_return = 0.0;
    double eval_success = 0.0;
};

std::string metrics_header(std::size_t heads);
std::string format_row(const MetricsRow& row);

struct Action {
    std::vector<double> action;
    std::ptrdiff_t head = -1;  // -1 for random warmup actions
    double root_value = 0.0;
};

struct UpdateStats {
    double model_loss = 0.0;
    double value_loss = 0.0;
    double reward_loss = 0.0;
    double afford_objective = 0.0;  // mean root value over the batch
};

class Trainer {
public:
    Trainer(const TrainConfig& config, std::uint64_t seed);
    // Optimizers hold pointers into the model, so a trainer stays put.
    Trainer(const Trainer&) = delete;
    Trainer& operator=(const Trainer&) = delete;

    const TrainConfig& config() const { return config_; }
    model::ValueModel& model() { return model_; }
    affordance::AffordanceModule& affordances() { return affordances_; }
    model::TargetModel& target() { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    std::size_t step_count() const { return step_; }
    std::size_t update_count() const { return updates_; }
    // Step of the first evaluation that reached stop_success, if any.
    std::optional<std::size_t> reached_step() const { return reached_; }

    // Fresh environment configured like the training one.
    std::unique_ptr<env::Environment> make_env() const;

    // Plans from (obs, goal) and picks a head, sampled or greedy.
    Action act(const std::vector<double>& obs, const std::vector<double>& goal, bool greedy, Rng& rng);
    // Output of a single head at (obs, goal), in [-1, 1]^action_dim.
    std::vector<double> head_action(const std::vector<double>& obs, const std::vector<double>& goal,
                                    std::size_t head);

    // One environment step followed, when due, by one learner update.
    void step();
    UpdateStats update();
    EvalResult evaluate(std::size_t episodes, std::uint64_t stream);

    // Runs to config.steps (or early stop), writing CSV rows to `csv` and
    // checkpoints under `checkpoint_dir` when set. On a numerical failure a
    // checkpoint is written there before the exception propagates.
    void run(std::ostream& csv, const std::filesystem::path& checkpoint_dir = {},
             const std::function<void(const MetricsRow&)>& on_row = {});

    void save(const std::filesystem::path& path);
    void load(const std::filesystem::path& path);

private:
    Var encode(Graph& g, const std::vector<double>& obs, const std::vector<double>& goal);
    MetricsRow flush(std::size_t step);

    TrainConfig config_;
    std::uint64_t seed_;
    Rng init_rng_, act_rng_, sample_rng_, plan_rng_;
    std::unique_ptr<env::Environment> env_;
    model::ValueModel model_;
    affordance::AffordanceModule affordances_;
    model::TargetModel target_;
    std::unique_ptr<ad::Adam> model_opt_;
    std::unique_ptr<ad::Adam> afford_opt_;
    ReplayBuffer buffer_;

    std::size_t step_ = 0;
    std::size_t updates_ = 0;
    std::uint64_t episode_ = 0;
    std::vector<double> obs_, goal_;
    double ep_return_ = 0.0;
    std::size_t ep_len_ = 0;
    std::optional<std::size_t> reached_;

    // interval accumulators
    double acc_return_ = 0.0, acc_len_ = 0.0, acc_success_ = 0.0;
    std::size_t acc_episodes_ = 0;
    UpdateStats acc_update_;
    std::size_t acc_updates_ = 0;
    double acc_root_ = 0.0;
    std::size_t acc_acts_ = 0;
    std::vector<double> acc_heads_;
    std::optional<EvalResult> last_eval_;
};

// CPU time consumed by the calling thread.
double thread_cpu_seconds();

// Deterministic per-purpose seeds derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace grasp::train
