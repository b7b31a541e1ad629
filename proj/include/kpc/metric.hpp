#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kpc/dataset.hpp"

namespace kpc {

enum class MetricFamily { euclidean, hamming01, frobenius, product };

// Per-column base distances: numeric |a-b|, categorical 1{a!=b}, rotation
// Frobenius. Blocks combine as sqrt(sum_c w_c * d_c^2), which preserves the
// metric axioms and reduces to the Euclidean case when all blocks are numeric.
struct MetricSpec {
    MetricFamily family = MetricFamily::product;
    std::vector<double> weights;  // per column in `cols` order; empty = all 1

    double weight(std::size_t block) const {
        return block < weights.size() ? weights[block] : 1.0;
    }
};

double distance(const MetricSpec& m, const Dataset& ds, std::span<const std::size_t> cols,
                std::size_t i, std::size_t j);

// Row-major packed point set. All supported metrics embed isometrically into
// Euclidean space (categorical columns one-hot scaled by 1/sqrt(2), rotations
// as their 9 entries, weights as sqrt(w) scaling), so graph construction and
// bandwidth selection work on packed coordinates with plain squared norms.
struct PointMatrix {
    std::vector<double> data;
    std::size_t n = 0;
    std::size_t dim = 0;

    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    const double* raw() const { return data.data(); }
};

PointMatrix embed_points(const MetricSpec& m, const Dataset& ds,
                         std::span<const std::size_t> cols);

// Packs numeric columns verbatim (no weighting); used by kernels that read
// raw coordinates rather than distances.
PointMatrix pack_numeric(const Dataset& ds, std::span<const std::size_t> cols);

}  // namespace kpc
