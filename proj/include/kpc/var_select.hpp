#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kpc/dataset.hpp"
#include "kpc/geom_graph.hpp"
#include "kpc/kernel.hpp"
#include "kpc/rkhs.hpp"

namespace kpc {

struct SelectionTrace {
    enum class StoppedBy { criterion, budget, exhausted };

    std::vector<std::size_t> order;  // selected predictor indices, in order
    std::vector<double> objective;   // T_n (or rho~^2) after each accepted step
    StoppedBy stopped_by = StoppedBy::criterion;
};

const char* stopped_by_name(SelectionTrace::StoppedBy s);

// Forward stepwise selection maximizing T_n(Y, graph on X_{S+{j}}), stopping
// when the best addition strictly decreases T_n (ties accept). The Y kernel
// is resolved once on the Y sample; candidate columns are standardized and
// compared under the Euclidean metric. T_n(empty) = -inf, so at least one
// variable is always selected.
SelectionTrace kfoci(const Dataset& ds, std::span<const std::size_t> y_cols,
                     std::span<const std::size_t> candidate_cols, const KernelSpec& kernel_y,
                     const GraphSpec& graph, const MetricSpec& metric,
                     std::optional<std::size_t> max_vars = std::nullopt);

// Kernel on a candidate subset S, resolved from its cardinality. The default
// is exp(-||x - x'||^2 / |S|) on standardized columns.
using SubsetKernelRule = std::function<KernelSpec(std::size_t cardinality)>;
SubsetKernelRule default_subset_kernel_rule();

// Fixed-budget forward selection maximizing rho~^2(Y, X_j | X_S) for exactly
// p0 steps.
SelectionTrace rkhs_forward_select(const Dataset& ds, std::span<const std::size_t> y_cols,
                                   std::span<const std::size_t> candidate_cols, std::size_t p0,
                                   const RkhsConfig& cfg,
                                   const SubsetKernelRule& rule = default_subset_kernel_rule());

}  // namespace kpc
