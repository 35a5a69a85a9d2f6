#pragma once

#include "grasp/autodiff/nn.hpp"

#include <functional>
#include <limits>

namespace grasp::ad {

struct GradCheckOptions {
    double step = 1e-5;
    // Denominator floor for the relative error, so that gradients that are
    // zero on both sides do not divide by zero.
    double floor = 1e-7;
    // Entries checked per parameter; the rest are skipped (chosen by a fixed
    // stride so runs are reproducible).
    std::size_t max_entries_per_param = std::numeric_limits<std::size_t>::max();
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t entries_checked = 0;
};

double relative_error(double analytic, double numeric, double floor);

// Compares Graph::backward against central differences of `loss`, which must
// build a scalar on the graph it is handed and depend only on `params`.
GradCheckResult check_gradients(const ParamList& params, const std::function<Var(Graph&)>& loss,
                                const GradCheckOptions& options = {});

}  // namespace grasp::ad
