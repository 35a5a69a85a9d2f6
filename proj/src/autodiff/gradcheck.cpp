#include "grasp/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace grasp::ad {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(const ParamList& params, const std::function<Var(Graph&)>& loss,
                                const GradCheckOptions& options) {
    std::vector<Tensor> analytic;
    {
        Graph g;
        Var root = loss(g);
        // parameters the loss never binds keep stale gradients otherwise
        zero_grads(params);
        g.backward(root);
        for (const Parameter* p : params) analytic.push_back(p->grad);
    }
    auto evaluate = [&] {
        Graph g;
        return loss(g).item();
    };

    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        const std::size_t n = p.value.size();
        const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, options.max_entries_per_param));
        for (std::size_t i = 0; i < n; i += stride) {
            const double saved = p.value[i];
            p.value[i] = saved + options.step;
            const double up = evaluate();
            p.value[i] = saved - options.step;
            const double down = evaluate();
            p.value[i] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double err = relative_error(analytic[pi][i], numeric, options.floor);
            ++result.entries_checked;
            if (err > result.max_rel_error || result.worst_param.empty()) {
                result.max_rel_error = std::max(result.max_rel_error, err);
                if (err >= result.max_rel_error) {
                    result.worst_param = p.name;
                    result.worst_index = i;
                    result.analytic_at_worst = analytic[pi][i];
                    result.numeric_at_worst = numeric;
                }
            }
        }
    }
    for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
    return result;
}

}  // namespace grasp::ad
