#include "grasp/train/trainer.hpp"

#include "grasp/autodiff/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>

namespace grasp::train {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

enum Stream : std::uint64_t { init_stream = 1, act_stream, sample_stream, plan_stream, env_stream, eval_stream };

model::ModelConfig model_config(const TrainConfig& c, const env::Environment& e) {
    model::ModelConfig m;
    m.observation_dim = e.observation_dim();
    m.goal_dim = e.goal_dim();
    m.action_dim = e.action_dim();
    m.state_dim = c.state_dim;
    m.hidden = c.hidden;
    m.option_mode = e.option_mode();
    m.goal_passthrough = c.variant == affordance::Variant::state && e.goal_dim() > 0;
    m.gamma = c.gamma;
    return m;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

const std::vector<std::string>& env_ids() {
    static const std::vector<std::string> ids{"collect", "point_mass", "reach_goal"};
    return ids;
}

double env_code(const std::string& id) {
    const auto& ids = env_ids();
    return static_cast<double>(std::find(ids.begin(), ids.end(), id) - ids.begin());
}

std::string env_name(double code) {
    const auto i = static_cast<std::size_t>(code);
    return i < env_ids().size() ? env_ids()[i] : "an unknown environment";
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the pair
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream * 0xBF58476D1CE4E5B9ULL + 0x94D049BB133111EBULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void validate(const TrainConfig& c) {
    require(c.env == "collect" || c.env == "point_mass" || c.env == "reach_goal",
            "env.id: unknown environment '" + c.env + "' (expected collect, point_mass or reach_goal)");
    require(c.gamma > 0.0 && c.gamma <= 1.0, "train.gamma: must lie in (0, 1]");
    require(c.collect_step > 0.0 && c.collect_step < 0.5, "env.collect_step: must lie in (0, 0.5)");
    require(c.heads >= 1, "afford.K: must be >= 1");
    require(c.afford_hidden >= 1, "afford.hidden: must be >= 1");
    require(c.afford_lr > 0.0, "afford.lr: must be positive");
    require(c.state_dim >= 1, "model.state_dim: must be >= 1");
    require(c.hidden >= 1, "model.hidden: must be >= 1");
    require(c.model_lr > 0.0, "model.lr: must be positive");
    require(c.unroll >= 1, "model.unroll_len: must be >= 1");
    require(c.sync_period >= 1, "target.sync_period: must be >= 1");
    require(c.capacity >= 1, "replay.capacity: must be >= 1");
    require(c.batch >= 1, "train.batch: must be >= 1");
    require(c.warmup <= c.capacity, "train.warmup: must not exceed replay.capacity");
    require(c.update_every >= 1, "train.update_every: must be >= 1");
    require(c.explore_noise >= 0.0, "train.explore_noise: must be >= 0");
    require(c.explore_random >= 0.0 && c.explore_random <= 1.0, "train.explore_random: must lie in [0, 1]");
    require(c.log_interval >= 1, "train.log_interval: must be >= 1");
    require(c.eval_interval >= 1, "train.eval_interval: must be >= 1");
    require(c.stop_success >= 0.0 && c.stop_success <= 1.0, "train.stop_success: must lie in [0, 1]");
    require(c.cpu_budget >= 0.0, "train.cpu_budget: must be non-negative");
    try {
        planner::PlannerConfig p = c.plan;
        p.gamma = c.gamma;
        planner::validate(p, c.heads);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("plan: ") + e.what());
    }
}

std::string metrics_header(std::size_t heads) {
    std::string h = "step,episode_return,episode_len,episode_success,model_loss,value_loss,reward_loss,"
                    "afford_objective,root_value";
    for (std::size_t k = 0; k < heads; ++k) h += ",head" + std::to_string(k) + "_frac";
    return h + ",eval_return,eval_success";
}

std::string format_row(const MetricsRow& r) {
    std::string s = std::to_string(r.step);
    for (double x : {r.episode_return, r.episode_len, r.episode_success, r.model_loss, r.value_loss, r.reward_loss,
                     r.afford_objective, r.root_value}) {
        s += "," + num(x);
    }
    for (double x : r.head_frac) s += "," + num(x);
    return s + "," + num(r.eval_return) + "," + num(r.eval_success);
}

Trainer::Trainer(const TrainConfig& config, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      init_rng_(derive_seed(seed, init_stream)),
      act_rng_(derive_seed(seed, act_stream)),
      sample_rng_(derive_seed(seed, sample_stream)),
      plan_rng_(derive_seed(seed, plan_stream)),
      env_((validate(config), make_env())),
      model_(model_config(config, *env_), init_rng_),
      affordances_({config.variant, config.heads, config.state_dim, env_->action_dim(), config.afford_hidden,
                    config.frozen},
                   init_rng_),
      target_(model::make_target(model_, affordances_)),
      buffer_(config.capacity),
      acc_heads_(config.heads, 0.0) {
    config_.plan.gamma = config.gamma;
    model_opt_ = std::make_unique<ad::Adam>(model_.parameters(), ad::AdamConfig{config.model_lr});
    afford_opt_ = std::make_unique<ad::Adam>(affordances_.trainable_parameters(), ad::AdamConfig{config.afford_lr});
}

std::unique_ptr<env::Environment> Trainer::make_env() const {
    env::EnvOptions o;
    o.gamma = config_.gamma;
    o.collect_step = config_.collect_step;
    return env::make_environment(config_.env, o);
}

Var Trainer::encode(Graph& g, const std::vector<double>& obs, const std::vector<double>& goal) {
    std::optional<Var> gv;
    if (!goal.empty()) gv = model::constant_rows(g, 1, goal.size(), goal);
    return model_.encode(g, model::constant_rows(g, 1, obs.size(), obs), gv);
}

Action Trainer::act(const std::vector<double>& obs, const std::vector<double>& goal, bool greedy, Rng& rng) {
    Graph g;
    g.freeze(model_.parameters());
    g.freeze(affordances_.parameters());
    Var s = encode(g, obs, goal);
    planner::PlanResult result = planner::plan(g, s, model_, affordances_, config_.plan, rng);
    planner::RootChoice choice = planner::root_sample(result, rng, greedy);
    return {choice.action, static_cast<std::ptrdiff_t>(choice.index), result.root_value.item()};
}

std::vector<double> Trainer::head_action(const std::vector<double>& obs, const std::vector<double>& goal,
                                         std::size_t head) {
    if (head >= config_.heads) throw std::out_of_range("head index " + std::to_string(head) + " out of range");
    Graph g;
    Var s = encode(g, obs, goal);
    const ad::Tensor out = affordances_.afford(g, model_.affordance_input(s)).value();
    const std::size_t a = affordances_.action_dim();
    return std::vector<double>(out.data().begin() + head * a, out.data().begin() + (head + 1) * a);
}

void Trainer::step() {
    if (obs_.empty() || env_->done()) {
        auto r = env_->reset(act_rng_);
        obs_ = std::move(r.observation);
        goal_ = std::move(r.goal);
        ep_return_ = 0.0;
        ep_len_ = 0;
    }
    Action a;
    const bool explore =
        config_.explore_random > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(act_rng_) < config_.explore_random;
    if ((step_ < config_.warmup && config_.warmup_random) || explore) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        a.action.resize(env_->action_dim());
        for (double& x : a.action) x = u(act_rng_);
    } else {
        a = act(obs_, goal_, false, act_rng_);
        if (config_.explore_noise > 0.0) {
            std::normal_distribution<double> n(0.0, config_.explore_noise);
            for (double& x : a.action) x = std::clamp(x + n(act_rng_), -1.0, 1.0);
        }
        acc_root_ += a.root_value;
        acc_acts_ += 1;
        acc_heads_[static_cast<std::size_t>(a.head)] += 1.0;
    }
    env::StepResult r = env_->step(a.action);
    Transition t;
    t.observation = obs_;
    t.goal = goal_;
    t.action = a.action;
    t.reward = r.reward;
    t.duration = r.duration;
    t.next_observation = r.observation;
    t.terminal = r.terminal;
    t.episode = episode_;
    buffer_.append(std::move(t));
    ep_return_ += r.reward;
    ep_len_ += 1;
    obs_ = std::move(r.observation);
    if (env_->done()) {
        acc_return_ += ep_return_;
        acc_len_ += static_cast<double>(ep_len_);
        acc_success_ += env_->solved() ? 1.0 : 0.0;
        acc_episodes_ += 1;
        episode_ += 1;
    }
    step_ += 1;
    if (buffer_.size() >= std::max<std::size_t>(config_.warmup, 1) && step_ % config_.update_every == 0) {
        try {
            UpdateStats u = update();
            acc_update_.model_loss += u.model_loss;
            acc_update_.value_loss += u.value_loss;
            acc_update_.reward_loss += u.reward_loss;
            acc_update_.afford_objective += u.afford_objective;
            acc_updates_ += 1;
        } catch (const WarmupIncomplete&) {
        }
    }
}

UpdateStats Trainer::update() {
    std::vector<EpisodeSegment> segments;
    segments.reserve(config_.batch);
    for (std::size_t i = 0; i < config_.batch; ++i) segments.push_back(buffer_.sample(config_.unroll, sample_rng_));
    const std::vector<double> boot = model::bootstrap_values(target_, segments);
    std::vector<std::vector<double>> targets;
    targets.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        targets.push_back(model::value_targets(segments[i], boot[i], config_.gamma));
    }

    UpdateStats stats;
    {
        Graph g;
        model::ModelLoss loss = model::model_loss(g, model_, segments, targets);
        if (!std::isfinite(loss.total.item())) {
            throw ad::NumericalError("model loss is not finite at update " + std::to_string(updates_));
        }
        ad::zero_grads(model_.parameters());
        g.backward(loss.total);
        model_opt_->step();
        stats.model_loss = loss.total.item();
        stats.value_loss = loss.value.item();
        stats.reward_loss = loss.reward.item();
    }
    {
        const model::ModelConfig& mc = model_.config();
        const std::size_t b = segments.size();
        std::vector<double> obs, goals;
        for (const auto& s : segments) {
            obs.insert(obs.end(), s.observations.front().begin(), s.observations.front().end());
            goals.insert(goals.end(), s.goal.begin(), s.goal.end());
        }
        Graph g;
        // model weights receive no update from this objective
        g.freeze(model_.parameters());
        std::optional<Var> gv;
        if (mc.goal_dim > 0) gv = model::constant_rows(g, b, mc.goal_dim, std::move(goals));
        Var roots = ad::stop_gradient(model_.encode(g, model::constant_rows(g, b, mc.observation_dim, std::move(obs)), gv));
        Var objective = planner::affordance_objective(g, roots, model_, affordances_, config_.plan, plan_rng_);
        if (!std::isfinite(objective.item())) {
            throw ad::NumericalError("affordance objective is not finite at update " + std::to_string(updates_));
        }
        stats.afford_objective = objective.item() / static_cast<double>(b);
        if (!afford_opt_->parameters().empty()) {
            ad::zero_grads(affordances_.parameters());
            g.backward(ad::scale(objective, -1.0));
            afford_opt_->step();
        }
    }
    updates_ += 1;
    target_.updates_since_sync += 1;
    if (target_.updates_since_sync >= static_cast<long>(config_.sync_period)) {
        model::sync_target(model_, affordances_, target_);
    }
    return stats;
}

EvalResult Trainer::evaluate(std::size_t episodes, std::uint64_t stream) {
    EvalResult out;
    if (episodes == 0) return out;
    Rng rng(derive_seed(seed_, eval_stream + 16 * stream));
    auto e = make_env();
    for (std::size_t i = 0; i < episodes; ++i) {
        auto r = e->reset(rng);
        std::vector<double> obs = r.observation;
        double total = 0.0;
        std::size_t len = 0;
        while (!e->done()) {
            Action a = act(obs, r.goal, config_.eval_greedy, rng);
            auto s = e->step(a.action);
            total += s.reward;
            obs = std::move(s.observation);
            len += 1;
        }
        out.mean_return += total;
        out.mean_length += static_cast<double>(len);
        out.success_rate += e->solved() ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(episodes);
    out.mean_return /= n;
    out.mean_length /= n;
    out.success_rate /= n;
    return out;
}

MetricsRow Trainer::flush(std::size_t step) {
    MetricsRow row;
    row.step = step;
    const double eps = static_cast<double>(acc_episodes_);
    row.episode_return = acc_episodes_ ? acc_return_ / eps : nan_value;
    row.episode_len = acc_episodes_ ? acc_len_ / eps : nan_value;
    row.episode_success = acc_episodes_ ? acc_success_ / eps : nan_value;
    const double ups = static_cast<double>(acc_updates_);
    row.model_loss = acc_updates_ ? acc_update_.model_loss / ups : nan_value;
    row.value_loss = acc_updates_ ? acc_update_.value_loss / ups : nan_value;
    row.reward_loss = acc_updates_ ? acc_update_.reward_loss / ups : nan_value;
    row.afford_objective = acc_updates_ ? acc_update_.afford_objective / ups : nan_value;
    row.root_value = acc_acts_ ? acc_root_ / static_cast<double>(acc_acts_) : nan_value;
    for (double c : acc_heads_) row.head_frac.push_back(acc_acts_ ? c / static_cast<double>(acc_acts_) : nan_value);
    row.eval_return = last_eval_ ? last_eval_->mean_return : nan_value;
    row.eval_success = last_eval_ ? last_eval_->success_rate : nan_value;

    acc_return_ = acc_len_ = acc_success_ = 0.0;
    acc_episodes_ = 0;
    acc_update_ = {};
    acc_updates_ = 0;
    acc_root_ = 0.0;
    acc_acts_ = 0;
    std::fill(acc_heads_.begin(), acc_heads_.end(), 0.0);
    last_eval_.reset();
    return row;
}

double thread_cpu_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

void Trainer::run(std::ostream& csv, const std::filesystem::path& checkpoint_dir,
                  const std::function<void(const MetricsRow&)>& on_row) {
    csv << metrics_header(config_.heads) << '\n';
    const double cpu0 = thread_cpu_seconds();
    try {
        while (step_ < config_.steps) {
            step();
            bool stop = false;
            if (step_ % config_.eval_interval == 0 && config_.eval_episodes > 0) {
                last_eval_ = evaluate(config_.eval_episodes, 0);
                if (config_.stop_success > 0.0 && last_eval_->success_rate >= config_.stop_success) {
                    reached_ = step_;
                    stop = true;
                }
            }
            if (step_ % config_.log_interval == 0 || stop || step_ == config_.steps) {
                MetricsRow row = flush(step_);
                csv << format_row(row) << '\n';
                csv.flush();
                if (on_row) on_row(row);
                if (config_.cpu_budget > 0.0 && thread_cpu_seconds() - cpu0 > config_.cpu_budget) stop = true;
            }
            if (!checkpoint_dir.empty() && config_.checkpoint_interval > 0 && step_ % config_.checkpoint_interval == 0) {
                save(checkpoint_dir / ("step_" + std::to_string(step_) + ".grsp"));
            }
            if (stop) break;
        }
    } catch (const ad::NumericalError&) {
        if (!checkpoint_dir.empty()) save(checkpoint_dir / "numerical_failure.grsp");
        throw;
    }
    if (!checkpoint_dir.empty()) save(checkpoint_dir / "final.grsp");
}

void Trainer::save(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    ad::NamedTensors all = ad::snapshot(model_.parameters());
    all.merge(ad::snapshot(affordances_.parameters()));
    for (auto& [name, t] : ad::snapshot(target_.parameters())) all.emplace("target." + name, t);
    all.emplace("trainer.step", ad::Tensor::scalar(static_cast<double>(step_)));
    all.emplace("meta.env", ad::Tensor::scalar(env_code(config_.env)));
    ad::save_checkpoint(path, all);
}

void Trainer::load(const std::filesystem::path& path) {
    ad::NamedTensors all = ad::load_checkpoint(path);
    if (auto it = all.find("meta.env"); it != all.end() && it->second.item() != env_code(config_.env)) {
        throw std::invalid_argument("checkpoint " + path.string() + " was trained on " + env_name(it->second.item()) +
                                    ", the config asks for " + config_.env);
    }
    ad::restore(all, model_.parameters());
    ad::restore(all, affordances_.parameters());
    ad::NamedTensors target;
    for (auto& [name, t] : all) {
        if (name.rfind("target.", 0) == 0) target.emplace(name.substr(7), t);
    }
    if (target.empty()) {
        model::sync_target(model_, affordances_, target_);
    } else {
        ad::restore(target, target_.parameters());
    }
}

}  // namespace grasp::train
