#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kpc/dataset.hpp"
#include "kpc/metric.hpp"

namespace kpc {

struct GraphSpec {
    enum class Kind { knn, mst };
    Kind kind = Kind::knn;
    int k = 1;
    bool directed = true;
    std::uint64_t seed = 0;

    static GraphSpec knn(int k, bool directed = true, std::uint64_t seed = 0) {
        return {Kind::knn, k, directed, seed};
    }
    static GraphSpec mst(std::uint64_t seed = 0) { return {Kind::mst, 1, false, seed}; }
};

struct GeometricGraph {
    std::vector<std::vector<std::uint32_t>> out_neighbors;
    bool directed = true;
    std::size_t ties_broken = 0;  // queries whose tie pool exceeded the open slots

    std::size_t n() const { return out_neighbors.size(); }
    std::size_t degree(std::size_t i) const { return out_neighbors[i].size(); }

    // One line per node: index, degree, neighbor list.
    std::string to_text() const;
};

// Directed or undirected K-NN graph. Each node's out-neighbors attain the K
// smallest distances (self excluded); equidistant candidates at the cutoff
// are sampled uniformly from per-node streams derived from (seed, node), so
// the result does not depend on thread scheduling. Duplicate coordinates are
// grouped once and queried through the group structure, which keeps the
// categorical / discrete-support case near linear.
GeometricGraph build_knn(const GraphSpec& spec, const PointMatrix& pts);

// O(n^2) scan over a caller-supplied distance; the fallback for metrics with
// no coordinate embedding and the route the knockoff statistics use for their
// column-order-canonical distances. Same tie semantics as build_knn.
GeometricGraph build_knn_custom(std::size_t n, int k, bool directed, std::uint64_t seed,
                                const std::function<double(std::size_t, std::size_t)>& sqdist_fn);

// Minimum spanning tree of the complete distance graph, exposed as an
// undirected graph. Equal-weight candidates resolve by (weight, lower index,
// higher index), so the tree is deterministic.
GeometricGraph build_mst(const PointMatrix& pts);

GeometricGraph build_graph(const GraphSpec& spec, const PointMatrix& pts);
GeometricGraph build_graph(const GraphSpec& spec, const Dataset& ds,
                           std::span<const std::size_t> cols, const MetricSpec& metric);

double mst_total_weight(const GeometricGraph& g, const PointMatrix& pts);

}  // namespace kpc
