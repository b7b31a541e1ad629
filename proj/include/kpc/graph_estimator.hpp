#pragma once

#include <map>
#include <string>

#include "kpc/dataset.hpp"
#include "kpc/geom_graph.hpp"
#include "kpc/kernel.hpp"
#include "kpc/metric.hpp"

namespace kpc {

struct KpcEstimate {
    double value = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    bool clamped = false;
    std::map<std::string, double> diagnostics;
};

// (1/n) sum_i (1/d_i) sum_{j in out_neighbors(i)} k(Y_i, Y_j)
double t_n(const KernelEvaluator& kernel_y, const GeometricGraph& graph);

// Graph-based estimate of rho^2(Y, Z | X): the two statistics run over
// graphs built on X and on (X, Z); the diagonal term uses the same Y kernel,
// resolved once on the Y sample and frozen. Both graphs derive their
// tie-breaking streams from one base seed with distinct stream identifiers.
KpcEstimate kpc_graph(const Dataset& ds, const VariableRoles& roles, const KernelSpec& kernel_y,
                      const GraphSpec& spec_x, const GraphSpec& spec_xz, const MetricSpec& metric,
                      bool clamp = false);

}  // namespace kpc
