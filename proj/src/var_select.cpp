#include "kpc/var_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kpc/error.hpp"
#include "kpc/graph_estimator.hpp"
#include "kpc/parallel.hpp"
#include "kpc/rng.hpp"

namespace kpc {

const char* stopped_by_name(SelectionTrace::StoppedBy s) {
    switch (s) {
        case SelectionTrace::StoppedBy::criterion: return "criterion";
        case SelectionTrace::StoppedBy::budget: return "budget";
        case SelectionTrace::StoppedBy::exhausted: return "exhausted";
    }
    return "unknown";
}

namespace {

// Standardize the numeric candidate columns in place (constant columns are
// left untouched; their distance contribution is zero either way).
Dataset standardize_candidates(const Dataset& ds, std::span<const std::size_t> candidates) {
    std::vector<std::size_t> targets;
    for (std::size_t c : candidates) {
        if (ds.column(c).type() != ColumnType::numeric) continue;
        const auto ms = column_mean_sd(ds, c);
        if (ms[1] > 0.0) targets.push_back(c);
    }
    return targets.empty() ? ds : standardize(ds, targets);
}

}  // namespace

SelectionTrace kfoci(const Dataset& ds, std::span<const std::size_t> y_cols,
                     std::span<const std::size_t> candidate_cols, const KernelSpec& kernel_y,
                     const GraphSpec& graph, const MetricSpec& metric,
                     std::optional<std::size_t> max_vars) {
    if (candidate_cols.empty()) fail(errc::invalid_argument, "no candidate columns");
    if (graph.kind != GraphSpec::Kind::knn)
        fail(errc::invalid_argument, "kfoci uses K-NN graphs");

    const Dataset data = standardize_candidates(ds, candidate_cols);
    const ResolvedKernel rk = resolve_kernel(kernel_y, data, y_cols);
    const KernelEvaluator ky(rk, data, y_cols);

    const std::size_t p = candidate_cols.size();
    const std::size_t cap = std::min(max_vars.value_or(p), std::min(p, data.n() - 1));

    SelectionTrace trace;
    std::vector<std::size_t> selected;
    std::vector<std::size_t> remaining(candidate_cols.begin(), candidate_cols.end());
    double t_current = -std::numeric_limits<double>::infinity();

    std::size_t step = 0;
    while (!remaining.empty()) {
        if (selected.size() >= cap) {
            trace.stopped_by = SelectionTrace::StoppedBy::budget;
            break;
        }
        std::vector<double> scores(remaining.size());
        parallel_for(remaining.size(), [&](std::size_t idx) {
            std::vector<std::size_t> cols = selected;
            cols.push_back(remaining[idx]);
            GraphSpec spec = graph;
            spec.seed = RngStream::derive_key(graph.seed, {stream_tag::graph_x, step, remaining[idx]});
            const GeometricGraph g = build_graph(spec, data, cols, metric);
            scores[idx] = t_n(ky, g);
        });
        std::size_t best = 0;
        for (std::size_t idx = 1; idx < scores.size(); ++idx) {
            if (scores[idx] > scores[best]) best = idx;  // ties keep the lowest index
        }
        if (!(scores[best] >= t_current)) {
            trace.stopped_by = SelectionTrace::StoppedBy::criterion;
            break;
        }
        t_current = scores[best];
        selected.push_back(remaining[best]);
        trace.order.push_back(remaining[best]);
        trace.objective.push_back(t_current);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
        ++step;
        if (remaining.empty()) trace.stopped_by = SelectionTrace::StoppedBy::exhausted;
    }
    return trace;
}

SubsetKernelRule default_subset_kernel_rule() {
    return [](std::size_t cardinality) {
        // exp(-||x - x'||^2 / |S|)
        return KernelSpec::gaussian_gamma(1.0 / static_cast<double>(std::max<std::size_t>(cardinality, 1)));
    };
}

SelectionTrace rkhs_forward_select(const Dataset& ds, std::span<const std::size_t> y_cols,
                                   std::span<const std::size_t> candidate_cols, std::size_t p0,
                                   const RkhsConfig& cfg, const SubsetKernelRule& rule) {
    if (candidate_cols.empty()) fail(errc::invalid_argument, "no candidate columns");
    if (p0 < 1 || p0 > candidate_cols.size())
        fail(errc::invalid_argument, "budget must satisfy 1 <= p0 <= #candidates");

    const Dataset data = standardize_candidates(ds, candidate_cols);

    SelectionTrace trace;
    std::vector<std::size_t> selected;
    std::vector<std::size_t> remaining(candidate_cols.begin(), candidate_cols.end());

    while (selected.size() < p0) {
        std::vector<double> scores(remaining.size());
        parallel_for(remaining.size(), [&](std::size_t idx) {
            VariableRoles roles;
            roles.y_cols.assign(y_cols.begin(), y_cols.end());
            roles.z_cols = {remaining[idx]};
            roles.x_cols = selected;
            RkhsConfig step_cfg = cfg;
            step_cfg.kernel_x = rule(selected.size());
            step_cfg.kernel_xz = rule(selected.size() + 1);
            scores[idx] = kpc_rkhs(data, roles, step_cfg).value;
        });
        std::size_t best = 0;
        for (std::size_t idx = 1; idx < scores.size(); ++idx) {
            if (scores[idx] > scores[best]) best = idx;
        }
        selected.push_back(remaining[best]);
        trace.order.push_back(remaining[best]);
        trace.objective.push_back(scores[best]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    trace.stopped_by = remaining.empty() ? SelectionTrace::StoppedBy::exhausted
                                         : SelectionTrace::StoppedBy::budget;
    return trace;
}

}  // namespace kpc
