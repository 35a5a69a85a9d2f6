#pragma once

#include "grasp/affordance/affordance.hpp"
#include "grasp/model/value_model.hpp"

namespace grasp::model {

// Consecutive transitions from one episode. observations holds one more entry
// than actions. A segment is shorter than the requested length only when its
// last transition is terminal.
struct EpisodeSegment {
    std::vector<std::vector<double>> observations;
    std::vector<double> goal;
    std::vector<std::vector<double>> actions;
    std::vector<double> rewards;
    std::vector<int> durations;
    std::vector<bool> terminals;

    std::size_t length() const { return actions.size(); }
    // Throws std::invalid_argument if the fields are inconsistent.
    void validate() const;
};

// Frozen copy of the online model and affordance module used for bootstrap
// targets. Only sync_target writes to it.
struct TargetModel {
    ValueModel model;
    affordance::AffordanceModule affordances;
    long syncs = 0;
    long updates_since_sync = 0;

    ParamList parameters();
};

TargetModel make_target(ValueModel& model, affordance::AffordanceModule& affordances);
void sync_target(ValueModel& model, affordance::AffordanceModule& affordances, TargetModel& target);

// max_k Q(s, a^k) for each row of `states`, where
// Q(s, a) = r̂(s, a) + gamma^n̂(s, a) * v(f_D(s, a)) and a^k are the module's
// K affordances at s. Returns (N, 1).
Var max_one_step_q(Graph& g, ValueModel& model, affordance::AffordanceModule& affordances, Var states);

// Bootstrap value max_b Q_target(s_{n+1}, b) of every segment's final
// observation, evaluated in one batch.
std::vector<double> bootstrap_values(TargetModel& target, const std::vector<EpisodeSegment>& segments);

// v̂_j = r_j + gamma^{n_j} v̂_{j+1}, seeded with the bootstrap value and
// reset to zero past a terminal transition.
std::vector<double> value_targets(const EpisodeSegment& segment, double bootstrap, double gamma);
std::vector<double> value_targets(const EpisodeSegment& segment, TargetModel& target, double gamma);

struct ModelLoss {
    Var total;
    Var reward;
    Var value;
    Var duration;  // invalid in primitive mode
};

// Sum over segment positions, mean over the batch, of squared reward, value
// and (option mode) duration residuals. targets[b] must come from
// value_targets and is treated as a constant.
ModelLoss model_loss(Graph& g, ValueModel& model, const std::vector<EpisodeSegment>& segments,
                     const std::vector<std::vector<double>>& targets);

}  // namespace grasp::model
