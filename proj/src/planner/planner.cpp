#include "grasp/planner/planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace grasp::planner {

Mode parse_mode(const std::string& name) {
    if (name == "complete") return Mode::complete;
    if (name == "uct") return Mode::uct;
    throw std::invalid_argument("unknown planner mode '" + name + "' (expected complete or uct)");
}

std::string mode_name(Mode m) { return m == Mode::complete ? "complete" : "uct"; }

BackupMode effective_backup(const PlannerConfig& config) {
    if (config.backup) return *config.backup;
    return config.mode == Mode::complete ? BackupMode::softmax : BackupMode::visit_count;
}

std::size_t complete_node_count(std::size_t branching, std::size_t depth) {
    std::size_t total = 0;
    std::size_t level = 1;
    for (std::size_t d = 0; d <= depth; ++d) {
        total += level;
        if (d < depth && level > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(branching, 1)) {
            return std::numeric_limits<std::size_t>::max();
        }
        level *= branching;
    }
    return total;
}

void validate(const PlannerConfig& config, std::size_t branching) {
    if (branching == 0) throw std::invalid_argument("planner: K must be >= 1");
    if (config.depth == 0) throw std::invalid_argument("planner: depth must be >= 1");
    if (!(config.tau > 0.0)) throw std::invalid_argument("planner: tau must be positive");
    if (!(config.gamma > 0.0 && config.gamma <= 1.0)) throw std::invalid_argument("planner: gamma must be in (0, 1]");
    if (config.mode == Mode::complete) {
        const std::size_t nodes = complete_node_count(branching, config.depth);
        if (nodes > config.node_budget) {
            throw std::invalid_argument("planner: complete tree with K=" + std::to_string(branching) +
                                        ", D=" + std::to_string(config.depth) + " has " +
                                        (nodes == std::numeric_limits<std::size_t>::max() ? std::string("too many")
                                                                                          : std::to_string(nodes)) +
                                        " nodes, over the node budget of " + std::to_string(config.node_budget));
        }
    } else {
        if (config.trajectories == 0) throw std::invalid_argument("planner: uct needs at least one trajectory");
        const std::size_t nodes = config.trajectories * config.depth + 1;
        if (nodes > config.node_budget) {
            throw std::invalid_argument("planner: uct with H=" + std::to_string(config.trajectories) +
                                        ", D=" + std::to_string(config.depth) + " may create " +
                                        std::to_string(nodes) + " nodes, over the node budget of " +
                                        std::to_string(config.node_budget));
        }
    }
}

std::size_t CompleteTree::level_size(std::size_t level) const {
    std::size_t n = roots;
    for (std::size_t l = 0; l < level; ++l) n *= branching;
    return n;
}

std::size_t CompleteTree::node_count() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l <= depth; ++l) total += level_size(l);
    return total;
}

CompleteTree expand_complete(Graph& g, Var roots, ValueModel& model, AffordanceModule& affordances,
                             const PlannerConfig& config) {
    if (config.depth == 0) throw std::invalid_argument("expand_complete: depth must be >= 1");
    const std::size_t k = affordances.heads();
    const std::size_t adim = affordances.action_dim();
    CompleteTree tree;
    tree.roots = roots.rows();
    tree.branching = k;
    tree.depth = config.depth;
    tree.states.push_back(roots);
    for (std::size_t l = 0; l < config.depth; ++l) {
        Var s = tree.states.back();
        const std::size_t n = s.rows();
        Var acts = ad::reshape(affordances.afford(g, model.affordance_input(s)), {n * k, adim});
        std::vector<std::size_t> rep(n * k);
        for (std::size_t i = 0; i < n * k; ++i) rep[i] = i / k;
        model::TransitionOutput t = model.transition(g, ad::gather_rows(s, std::move(rep)), acts);
        tree.actions.push_back(acts);
        tree.rewards.push_back(t.reward);
        tree.durations.push_back(t.duration);
        tree.states.push_back(t.next_state);
    }
    tree.leaf_values = model.value(g, tree.states.back());
    return tree;
}

CompleteBackup backup(const CompleteTree& tree, double gamma, double tau, BackupMode mode) {
    if (!tree.leaf_values.valid()) throw std::invalid_argument("backup: empty tree");
    if (!(tau > 0.0)) throw std::invalid_argument("backup: tau must be positive");
    const double log_gamma = std::log(gamma);
    const std::size_t k = tree.branching;
    CompleteBackup out;
    out.q.resize(tree.depth);
    out.policy.resize(tree.depth);
    out.values.resize(tree.depth + 1);
    Var v = tree.leaf_values;
    out.values[tree.depth] = v;
    for (std::size_t l = tree.depth; l-- > 0;) {
        const std::size_t n = tree.level_size(l);
        Var disc = ad::exp(ad::scale(tree.durations[l], log_gamma));
        Var q = ad::reshape(ad::add(tree.rewards[l], ad::mul(disc, v)), {n, k});
        Var pi = mode == BackupMode::softmax
                     ? ad::softmax(q, tau)
                     : v.graph().constant(ad::Tensor(ad::Shape{n, k}, 1.0 / static_cast<double>(k)));
        v = ad::row_sum(ad::mul(pi, q));
        out.q[l] = q;
        out.policy[l] = pi;
        out.values[l] = v;
    }
    return out;
}

void MinMaxStats::update(double x) {
    lo_ = std::min(lo_, x);
    hi_ = std::max(hi_, x);
}

double MinMaxStats::normalize(double x) const {
    if (hi_ > lo_) return (x - lo_) / (hi_ - lo_);
    return 0.0;
}

double uct_bonus(int parent_visits, int edge_visits, std::size_t branching, double c1, double c2) {
    const double n = static_cast<double>(parent_visits);
    const double prior = 1.0 / static_cast<double>(branching);
    return prior * std::sqrt(n) / (1.0 + edge_visits) * (c1 + std::log((n + c2 + 1.0) / c2));
}

namespace {

std::size_t uniform_index(std::size_t n, Rng& rng) {
    const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
    return std::min(i, n - 1);
}

std::size_t select_affordance(const SearchTree& tree, std::size_t node_id, const MinMaxStats& stats,
                              const PlannerConfig& config, Rng& rng) {
    const SearchNode& node = tree.nodes[node_id];
    const std::size_t k = tree.branching;
    auto edge_visits = [&](std::size_t i) { return node.edges[i] < 0 ? 0 : tree.edges[node.edges[i]].visits; };
    if (node_id == 0) {
        std::vector<std::size_t> untried;
        for (std::size_t i = 0; i < k; ++i) {
            if (edge_visits(i) == 0) untried.push_back(i);
        }
        if (!untried.empty()) return untried[uniform_index(untried.size(), rng)];
    } else if (node.visits == 0) {
        return uniform_index(k, rng);
    }
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        const int n = edge_visits(i);
        const double q = n > 0 ? stats.normalize(tree.edges[node.edges[i]].mean_return()) : 0.0;
        const double score = q + uct_bonus(node.visits, n, k, config.c1, config.c2);
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

}  // namespace

SearchTree expand_uct(Graph& g, Var root, ValueModel& model, AffordanceModule& affordances,
                      const PlannerConfig& config, Rng& rng) {
    if (config.trajectories == 0) throw std::invalid_argument("expand_uct: need at least one trajectory");
    if (root.rows() != 1) throw ad::ShapeError("expand_uct: expects a single root state");
    const std::size_t k = affordances.heads();
    const std::size_t adim = affordances.action_dim();
    const double log_gamma = std::log(config.gamma);

    SearchTree tree;
    tree.branching = k;
    tree.depth = config.depth;
    tree.nodes.push_back({root, 0, 0, {}, std::vector<std::ptrdiff_t>(k, -1), {}});
    MinMaxStats stats;

    for (std::size_t h = 0; h < config.trajectories; ++h) {
        std::size_t node = 0;
        std::vector<std::size_t> path;
        while (tree.nodes[node].depth < config.depth) {
            if (!tree.nodes[node].affordances.valid()) {
                tree.nodes[node].affordances = affordances.afford(g, model.affordance_input(tree.nodes[node].state));
                ++tree.expansions;
            }
            const std::size_t a = select_affordance(tree, node, stats, config, rng);
            if (tree.nodes[node].edges[a] < 0) {
                Var action = ad::slice(tree.nodes[node].affordances, a * adim, (a + 1) * adim);
                model::TransitionOutput t = model.transition(g, tree.nodes[node].state, action);
                const std::size_t child = tree.nodes.size();
                tree.nodes.push_back(
                    {t.next_state, tree.nodes[node].depth + 1, 0, {}, std::vector<std::ptrdiff_t>(k, -1), {}});
                SearchEdge e;
                e.parent = node;
                e.child = child;
                e.affordance = a;
                e.action = action;
                e.reward = t.reward;
                e.duration = t.duration;
                tree.nodes[node].edges[a] = static_cast<std::ptrdiff_t>(tree.edges.size());
                tree.edges.push_back(e);
            }
            path.push_back(static_cast<std::size_t>(tree.nodes[node].edges[a]));
            node = tree.edges[path.back()].child;
        }
        SearchNode& leaf = tree.nodes[node];
        if (!leaf.leaf_value.valid()) leaf.leaf_value = model.value(g, leaf.state);
        double ret = leaf.leaf_value.item();
        leaf.visits += 1;
        for (std::size_t i = path.size(); i-- > 0;) {
            SearchEdge& e = tree.edges[path[i]];
            ret = e.reward.item() + std::exp(e.duration.item() * log_gamma) * ret;
            e.visits += 1;
            e.return_sum += ret;
            stats.update(e.mean_return());
            tree.nodes[e.parent].visits += 1;
        }
    }
    return tree;
}

TreeBackup backup(const SearchTree& tree, double gamma, double tau, BackupMode mode) {
    if (tree.nodes.empty()) throw std::invalid_argument("backup: empty tree");
    if (!(tau > 0.0)) throw std::invalid_argument("backup: tau must be positive");
    const double log_gamma = std::log(gamma);
    TreeBackup out;
    out.node_values.resize(tree.nodes.size());
    out.edge_q.resize(tree.edges.size());
    out.policy.resize(tree.nodes.size());
    // children are always appended after their parent
    for (std::size_t i = tree.nodes.size(); i-- > 0;) {
        const SearchNode& node = tree.nodes[i];
        std::vector<std::size_t> taken;
        for (auto e : node.edges) {
            if (e >= 0) taken.push_back(static_cast<std::size_t>(e));
        }
        if (taken.empty()) {
            if (!node.leaf_value.valid()) throw std::invalid_argument("backup: node without edges or leaf value");
            out.node_values[i] = node.leaf_value;
            continue;
        }
        std::vector<Var> qs;
        int total = 0;
        for (auto e : taken) {
            const SearchEdge& edge = tree.edges[e];
            Var disc = ad::exp(ad::scale(edge.duration, log_gamma));
            out.edge_q[e] = ad::add(edge.reward, ad::mul(disc, out.node_values[edge.child]));
            qs.push_back(out.edge_q[e]);
            total += edge.visits;
        }
        Var q = qs.size() == 1 ? qs[0] : ad::concat(std::span<const Var>(qs));
        Var pi;
        if (mode == BackupMode::softmax) {
            pi = ad::softmax(q, tau);
        } else {
            if (total <= 0) throw std::invalid_argument("backup: visit-count policy at an unvisited node");
            std::vector<double> w;
            for (auto e : taken) w.push_back(static_cast<double>(tree.edges[e].visits) / total);
            pi = q.graph().constant(ad::Tensor(ad::Shape{1, taken.size()}, std::move(w)));
        }
        out.policy[i] = pi.value().data();
        out.node_values[i] = ad::row_sum(ad::mul(pi, q));
    }
    return out;
}

PlanResult plan(Graph& g, Var root, ValueModel& model, AffordanceModule& affordances, const PlannerConfig& config,
                Rng& rng) {
    validate(config, affordances.heads());
    if (root.rows() != 1) throw ad::ShapeError("plan: expects a single root state");
    const std::size_t k = affordances.heads();
    const std::size_t adim = affordances.action_dim();
    const BackupMode mode = effective_backup(config);
    PlanResult r;
    r.policy.assign(k, 0.0);
    r.root_q.assign(k, std::numeric_limits<double>::quiet_NaN());
    r.actions.assign(k, std::vector<double>(adim, 0.0));

    if (config.mode == Mode::complete) {
        CompleteTree tree = expand_complete(g, root, model, affordances, config);
        CompleteBackup b = backup(tree, config.gamma, config.tau, mode);
        const auto& q = b.q[0].value();
        const auto& pi = b.policy[0].value();
        const auto& acts = tree.actions[0].value();
        for (std::size_t i = 0; i < k; ++i) {
            r.root_q[i] = q.at(0, i);
            r.policy[i] = pi.at(0, i);
            for (std::size_t j = 0; j < adim; ++j) r.actions[i][j] = acts.at(i, j);
        }
        r.root_value = b.values[0];
        r.tree_nodes = tree.node_count();
        for (std::size_t l = 0; l < tree.depth; ++l) r.expansions += tree.level_size(l);
        return r;
    }

    SearchTree tree = expand_uct(g, root, model, affordances, config, rng);
    TreeBackup b = backup(tree, config.gamma, config.tau, mode);
    const SearchNode& top = tree.nodes[0];
    std::size_t slot = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < adim; ++j) r.actions[i][j] = top.affordances.value().at(0, i * adim + j);
        if (top.edges[i] < 0) continue;
        r.root_q[i] = b.edge_q[top.edges[i]].item();
        r.policy[i] = b.policy[0][slot++];
    }
    r.root_value = b.node_values[0];
    r.tree_nodes = tree.nodes.size();
    r.expansions = static_cast<std::size_t>(tree.expansions);
    return r;
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

RootChoice root_sample(const PlanResult& result, Rng& rng, bool greedy) {
    const auto& pi = result.policy;
    if (pi.empty()) throw std::invalid_argument("root_sample: empty policy");
    std::size_t index = 0;
    if (greedy) {
        for (std::size_t i = 1; i < pi.size(); ++i) {
            if (pi[i] > pi[index]) index = i;
        }
    } else {
        const double u = uniform01(rng);
        double acc = 0.0;
        index = pi.size();
        for (std::size_t i = 0; i < pi.size(); ++i) {
            acc += pi[i];
            if (u < acc) {
                index = i;
                break;
            }
        }
        if (index == pi.size()) {
            // rounding left u above the cumulative sum; take the last index with mass
            for (std::size_t i = pi.size(); i-- > 0;) {
                if (pi[i] > 0.0) {
                    index = i;
                    break;
                }
            }
        }
    }
    return {index, result.actions.at(index)};
}

Var affordance_objective(Graph& g, Var roots, ValueModel& model, AffordanceModule& affordances,
                         const PlannerConfig& config, Rng& rng) {
    validate(config, affordances.heads());
    const BackupMode mode = effective_backup(config);
    if (config.mode == Mode::complete) {
        CompleteTree tree = expand_complete(g, roots, model, affordances, config);
        return ad::sum(backup(tree, config.gamma, config.tau, mode).values[0]);
    }
    std::vector<Var> values;
    for (std::size_t j = 0; j < roots.rows(); ++j) {
        SearchTree tree = expand_uct(g, ad::gather_rows(roots, {j}), model, affordances, config, rng);
        values.push_back(backup(tree, config.gamma, config.tau, mode).node_values[0]);
    }
    return ad::sum(values.size() == 1 ? values[0] : ad::concat(std::span<const Var>(values)));
}

}  // namespace grasp::planner
