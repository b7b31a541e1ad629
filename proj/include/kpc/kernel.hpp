#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "kpc/dataset.hpp"
#include "kpc/metric.hpp"

namespace kpc {

enum class KernelFamily {
    gaussian,      // exp(-||u-v||^2 / (2 s^2))
    laplace,       // exp(-||u-v||_1 / s)
    linear,        // <u, v>
    distance,      // (||u||^a + ||v||^a - ||u-v||^a) / 2, a in (0,2)
    discrete,      // 1{u == v}
    so3,           // pi*theta*(pi-theta) / (8 sin theta), theta the rotation angle of B^-1 A
    hist_inv,      // prod_i (a_i + b_i + 1)^-1 on nonnegative vectors
    hist_expsqrt,  // exp(-sum_i sqrt(a_i + b_i)) on nonnegative vectors
    foci_cdf,      // mean_t 1{y1 >= t} 1{y2 >= t} over a reference sample
};

struct BandwidthRule {
    enum class Kind { fixed, median };
    Kind kind = Kind::median;
    double value = 1.0;

    static BandwidthRule fixed(double s) { return {Kind::fixed, s}; }
    static BandwidthRule median() { return {Kind::median, 1.0}; }
};

struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    BandwidthRule bandwidth;
    double alpha = 1.0;  // distance family exponent
    // foci_cdf reference; empty values default to the observed sample at
    // resolve time. Weights, if present, must match values (oracle use).
    std::vector<double> foci_values;
    std::vector<double> foci_weights;

    static KernelSpec gaussian(BandwidthRule rule = BandwidthRule::median()) {
        return {KernelFamily::gaussian, rule, 1.0, {}, {}};
    }
    static KernelSpec gaussian_fixed(double s) { return gaussian(BandwidthRule::fixed(s)); }
    // exp(-c * ||u-v||^2), i.e. s = sqrt(1 / (2c)).
    static KernelSpec gaussian_gamma(double c);
    static KernelSpec laplace(BandwidthRule rule = BandwidthRule::median()) {
        return {KernelFamily::laplace, rule, 1.0, {}, {}};
    }
    static KernelSpec linear() { return {KernelFamily::linear, {}, 1.0, {}, {}}; }
    static KernelSpec distance(double alpha) {
        return {KernelFamily::distance, {}, alpha, {}, {}};
    }
    static KernelSpec discrete() { return {KernelFamily::discrete, {}, 1.0, {}, {}}; }
    static KernelSpec so3() { return {KernelFamily::so3, {}, 1.0, {}, {}}; }
    static KernelSpec hist_inv() { return {KernelFamily::hist_inv, {}, 1.0, {}, {}}; }
    static KernelSpec hist_expsqrt() { return {KernelFamily::hist_expsqrt, {}, 1.0, {}, {}}; }
    static KernelSpec foci_cdf(std::vector<double> ref = {}, std::vector<double> weights = {}) {
        return {KernelFamily::foci_cdf, {}, 1.0, std::move(ref), std::move(weights)};
    }
};

KernelFamily kernel_family_from_name(const std::string& name);
const char* kernel_family_name(KernelFamily family);

// Median of the n(n-1)/2 pairwise distances (even count: mean of the two
// middle values). DegenerateBandwidth when the median vanishes.
double median_bandwidth(const Dataset& ds, std::span<const std::size_t> cols,
                        const MetricSpec& metric);
double median_bandwidth(const PointMatrix& pts);

// A KernelSpec with its bandwidth pinned. Resolution happens once per
// estimator call on the relevant point set, then the value is frozen.
struct ResolvedKernel {
    KernelSpec spec;
    double bandwidth = 1.0;

    // Point arguments: numeric families take coordinate vectors, so3 takes
    // the 9 row-major entries, discrete compares entries exactly, foci_cdf
    // reads a scalar.
    double eval(std::span<const double> a, std::span<const double> b) const;
    double eval_rotation(const Rotation& a, const Rotation& b) const {
        return eval(std::span<const double>(a.data(), 9), std::span<const double>(b.data(), 9));
    }
};

ResolvedKernel resolve_kernel(const KernelSpec& spec, const Dataset& ds,
                              std::span<const std::size_t> cols);
ResolvedKernel resolve_kernel(const KernelSpec& spec, const PointMatrix& pts);

// Pairwise kernel evaluation bound to one point set. Rows are packed once at
// construction (rotations as 9 entries, categorical columns one-hot for the
// discrete family), so the evaluator owns everything it reads.
class KernelEvaluator {
  public:
    KernelEvaluator(ResolvedKernel kernel, const Dataset& ds,
                    std::span<const std::size_t> cols);
    KernelEvaluator(ResolvedKernel kernel, PointMatrix pts);

    double eval(std::size_t i, std::size_t j) const {
        return kernel_.eval(pts_.row(i), pts_.row(j));
    }
    std::size_t n() const { return pts_.n; }
    const ResolvedKernel& kernel() const { return kernel_; }
    const PointMatrix& points() const { return pts_; }

  private:
    ResolvedKernel kernel_;
    PointMatrix pts_;
};

Eigen::MatrixXd gram_matrix(const KernelEvaluator& evaluator);
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Dataset& ds,
                            std::span<const std::size_t> cols);

}  // namespace kpc
