#include "kpc/graph_estimator.hpp"

#include <algorithm>
#include <cmath>

#include "kpc/error.hpp"
#include "kpc/numeric.hpp"
#include "kpc/rng.hpp"

namespace kpc {

double t_n(const KernelEvaluator& kernel_y, const GeometricGraph& graph) {
    const std::size_t n = graph.n();
    if (kernel_y.n() != n) fail(errc::size_mismatch, "graph and Y sample sizes differ");
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& neighbors = graph.out_neighbors[i];
        if (neighbors.empty()) fail(errc::size_mismatch, "graph has an isolated node");
        double acc = 0.0;
        for (std::uint32_t j : neighbors) acc += kernel_y.eval(i, j);
        terms[i] = acc / static_cast<double>(neighbors.size());
    }
    return pairwise_sum(terms) / static_cast<double>(n);
}

KpcEstimate kpc_graph(const Dataset& ds, const VariableRoles& roles, const KernelSpec& kernel_y,
                      const GraphSpec& spec_x, const GraphSpec& spec_xz, const MetricSpec& metric,
                      bool clamp) {
    roles.validate(ds);
    if (roles.x_cols.empty())
        fail(errc::invalid_argument,
             "kpc_graph requires conditioning columns; use the RKHS estimator for empty X");

    const ResolvedKernel rk = resolve_kernel(kernel_y, ds, roles.y_cols);
    const KernelEvaluator ky(rk, ds, roles.y_cols);

    std::vector<std::size_t> xz_cols = roles.x_cols;
    xz_cols.insert(xz_cols.end(), roles.z_cols.begin(), roles.z_cols.end());

    GraphSpec gx = spec_x;
    gx.seed = RngStream::derive_key(spec_x.seed, {stream_tag::graph_x});
    GraphSpec gxz = spec_xz;
    gxz.seed = RngStream::derive_key(spec_xz.seed, {stream_tag::graph_xz});

    const GeometricGraph graph_x = build_graph(gx, ds, roles.x_cols, metric);
    const GeometricGraph graph_xz = build_graph(gxz, ds, xz_cols, metric);

    const std::size_t n = ds.n();
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = ky.eval(i, i);
    const double diag_mean = pairwise_sum(diag) / static_cast<double>(n);

    const double t_x = t_n(ky, graph_x);
    const double t_xz = t_n(ky, graph_xz);

    KpcEstimate est;
    est.numerator = t_xz - t_x;
    est.denominator = diag_mean - t_x;
    est.diagnostics["t_x"] = t_x;
    est.diagnostics["t_xz"] = t_xz;
    est.diagnostics["diag_mean"] = diag_mean;
    est.diagnostics["ties_x"] = static_cast<double>(graph_x.ties_broken);
    est.diagnostics["ties_xz"] = static_cast<double>(graph_xz.ties_broken);

    const double scale = std::max(1.0, std::fabs(diag_mean));
    if (std::fabs(est.denominator) < 1e-12 * scale)
        fail(errc::degenerate_denominator,
             "denominator vanishes: Y is (in-sample) a function of X");

    est.value = est.numerator / est.denominator;
    if (clamp) {
        const double clamped_value = std::clamp(est.value, 0.0, 1.0);
        est.clamped = clamped_value != est.value;
        est.value = clamped_value;
    }
    return est;
}

}  // namespace kpc
