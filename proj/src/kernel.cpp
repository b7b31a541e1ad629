#include "kpc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kpc/error.hpp"
#include "kpc/numeric.hpp"
#include "kpc/parallel.hpp"
#include "kpc/simd/ops.hpp"

namespace kpc {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_numeric_vector_family(KernelFamily f) {
    switch (f) {
        case KernelFamily::gaussian:
        case KernelFamily::laplace:
        case KernelFamily::linear:
        case KernelFamily::distance:
        case KernelFamily::hist_inv:
        case KernelFamily::hist_expsqrt:
            return true;
        default:
            return false;
    }
}

double median_l1_bandwidth(const PointMatrix& pts) {
    const std::size_t n = pts.n;
    if (n < 2) fail(errc::degenerate_bandwidth, "median bandwidth needs n >= 2");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j)
            dists.push_back(simd::l1dist(pts.row(i), pts.row(j)));
    }
    const double med = median_inplace(dists);
    if (!(med > 0.0))
        fail(errc::degenerate_bandwidth, "median pairwise distance is zero");
    return med;
}

}  // namespace

KernelSpec KernelSpec::gaussian_gamma(double c) {
    if (!(c > 0.0)) fail(errc::invalid_argument, "gaussian gamma must be positive");
    return gaussian_fixed(std::sqrt(1.0 / (2.0 * c)));
}

KernelFamily kernel_family_from_name(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "laplace") return KernelFamily::laplace;
    if (name == "linear") return KernelFamily::linear;
    if (name == "distance") return KernelFamily::distance;
    if (name == "discrete") return KernelFamily::discrete;
    if (name == "so3") return KernelFamily::so3;
    if (name == "hist_inv") return KernelFamily::hist_inv;
    if (name == "hist_expsqrt") return KernelFamily::hist_expsqrt;
    if (name == "foci_cdf") return KernelFamily::foci_cdf;
    fail(errc::invalid_argument, "unknown kernel family '" + name + "'");
}

const char* kernel_family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::laplace: return "laplace";
        case KernelFamily::linear: return "linear";
        case KernelFamily::distance: return "distance";
        case KernelFamily::discrete: return "discrete";
        case KernelFamily::so3: return "so3";
        case KernelFamily::hist_inv: return "hist_inv";
        case KernelFamily::hist_expsqrt: return "hist_expsqrt";
        case KernelFamily::foci_cdf: return "foci_cdf";
    }
    return "unknown";
}

double median_bandwidth(const PointMatrix& pts) {
    const std::size_t n = pts.n;
    if (n < 2) fail(errc::degenerate_bandwidth, "median bandwidth needs n >= 2");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j)
            dists.push_back(std::sqrt(simd::sqdist(pts.row(i), pts.row(j))));
    }
    const double med = median_inplace(dists);
    if (!(med > 0.0))
        fail(errc::degenerate_bandwidth, "median pairwise distance is zero");
    return med;
}

double median_bandwidth(const Dataset& ds, std::span<const std::size_t> cols,
                        const MetricSpec& metric) {
    return median_bandwidth(embed_points(metric, ds, cols));
}

double ResolvedKernel::eval(std::span<const double> a, std::span<const double> b) const {
    if (a.size() != b.size()) fail(errc::type_mismatch, "kernel arguments differ in dimension");
    switch (spec.family) {
        case KernelFamily::gaussian: {
            const double s2 = bandwidth * bandwidth;
            return std::exp(-simd::sqdist(a, b) / (2.0 * s2));
        }
        case KernelFamily::laplace:
            return std::exp(-simd::l1dist(a, b) / bandwidth);
        case KernelFamily::linear:
            return simd::dot(a, b);
        case KernelFamily::distance: {
            const double alpha = spec.alpha;
            const double na = std::pow(simd::dot(a, a), alpha / 2.0);
            const double nb = std::pow(simd::dot(b, b), alpha / 2.0);
            const double nd = std::pow(simd::sqdist(a, b), alpha / 2.0);
            return 0.5 * (na + nb - nd);
        }
        case KernelFamily::discrete: {
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i] != b[i]) return 0.0;
            }
            return 1.0;
        }
        case KernelFamily::so3: {
            if (a.size() != 9) fail(errc::type_mismatch, "so3 kernel expects 3x3 matrices");
            // cos(theta) = (Tr(B^T A) - 1) / 2; entrywise dot equals Tr(B^T A).
            const double trace = simd::dot(a, b);
            const double c = std::clamp((trace - 1.0) / 2.0, -1.0, 1.0);
            const double theta = std::acos(c);
            // Evaluated at the half rotation angle: pi*h*(pi-h) / (8 sin h)
            // equals the character series sum_{odd n} sin(n h)/(n^3 sin h),
            // which makes the Gram matrices positive semidefinite. The full-
            // angle variant fails PSD on SO(3). Removable singularity at 0
            // with limit pi^2/8; the half-turn end (h = pi/2) is regular.
            const double half = theta / 2.0;
            if (half < 1e-7) return kPi * kPi / 8.0;
            return kPi * half * (kPi - half) / (8.0 * std::sin(half));
        }
        case KernelFamily::hist_inv: {
            double prod = 1.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double s = a[i] + b[i];
                if (s < 0.0) fail(errc::type_mismatch, "hist_inv expects nonnegative vectors");
                prod /= s + 1.0;
            }
            return prod;
        }
        case KernelFamily::hist_expsqrt: {
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double s = a[i] + b[i];
                if (s < 0.0) fail(errc::type_mismatch, "hist_expsqrt expects nonnegative vectors");
                acc += std::sqrt(s);
            }
            return std::exp(-acc);
        }
        case KernelFamily::foci_cdf: {
            if (spec.foci_values.empty())
                fail(errc::invalid_argument, "foci_cdf kernel has no reference sample");
            const double m = std::min(a[0], b[0]);
            // Reference is sorted at resolve time; weights hold the prefix sums.
            const auto& values = spec.foci_values;
            const auto& prefix = spec.foci_weights;
            const auto it = std::upper_bound(values.begin(), values.end(), m);
            const std::size_t count = static_cast<std::size_t>(it - values.begin());
            return count == 0 ? 0.0 : prefix[count - 1];
        }
    }
    fail(errc::invalid_argument, "unhandled kernel family");
}

ResolvedKernel resolve_kernel(const KernelSpec& spec, const PointMatrix& pts) {
    ResolvedKernel rk{spec, 1.0};
    switch (spec.family) {
        case KernelFamily::gaussian:
            rk.bandwidth = spec.bandwidth.kind == BandwidthRule::Kind::fixed
                               ? spec.bandwidth.value
                               : median_bandwidth(pts);
            break;
        case KernelFamily::laplace:
            rk.bandwidth = spec.bandwidth.kind == BandwidthRule::Kind::fixed
                               ? spec.bandwidth.value
                               : median_l1_bandwidth(pts);
            break;
        case KernelFamily::distance:
            if (!(spec.alpha > 0.0 && spec.alpha < 2.0))
                fail(errc::invalid_argument, "distance kernel exponent must lie in (0,2)");
            break;
        case KernelFamily::foci_cdf: {
            std::vector<double> values = spec.foci_values;
            std::vector<double> weights = spec.foci_weights;
            if (values.empty()) {
                if (pts.dim != 1)
                    fail(errc::type_mismatch, "foci_cdf kernel expects scalar observations");
                values.assign(pts.data.begin(), pts.data.end());
                weights.clear();
            }
            if (weights.empty())
                weights.assign(values.size(), 1.0 / static_cast<double>(values.size()));
            if (weights.size() != values.size())
                fail(errc::invalid_argument, "foci_cdf reference weights mismatch");
            // Sort reference by value and store cumulative weights so that
            // eval reduces to one binary search.
            std::vector<std::size_t> idx(values.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::sort(idx.begin(), idx.end(),
                      [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            std::vector<double> sorted_values(values.size());
            std::vector<double> prefix(values.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                sorted_values[i] = values[idx[i]];
                acc += weights[idx[i]];
                prefix[i] = acc;
            }
            // Reference weights are probabilities; normalizing the prefix
            // sums keeps eval inside [0, 1] against accumulated rounding.
            const double total = prefix.back();
            if (!(total > 0.0))
                fail(errc::invalid_argument, "foci_cdf reference weights must be positive");
            for (double& v : prefix) v /= total;
            rk.spec.foci_values = std::move(sorted_values);
            rk.spec.foci_weights = std::move(prefix);
            break;
        }
        default:
            break;
    }
    if ((spec.family == KernelFamily::gaussian || spec.family == KernelFamily::laplace) &&
        !(rk.bandwidth > 0.0))
        fail(errc::degenerate_bandwidth, "resolved bandwidth must be positive");
    return rk;
}

namespace {

PointMatrix pack_for_kernel(const KernelSpec& spec, const Dataset& ds,
                            std::span<const std::size_t> cols) {
    if (cols.empty()) fail(errc::invalid_argument, "kernel needs at least one column");
    switch (spec.family) {
        case KernelFamily::so3: {
            if (cols.size() != 1 || ds.column(cols[0]).type() != ColumnType::rotation)
                fail(errc::type_mismatch, "so3 kernel expects a single rotation column");
            PointMatrix pts;
            pts.n = ds.n();
            pts.dim = 9;
            pts.data.resize(pts.n * 9);
            const auto& rot = ds.column(cols[0]).rotation().values;
            for (std::size_t i = 0; i < pts.n; ++i)
                std::copy(rot[i].begin(), rot[i].end(), pts.data.begin() + i * 9);
            return pts;
        }
        case KernelFamily::discrete: {
            // Exact equality survives the embedding (one-hot is injective).
            MetricSpec m;
            return embed_points(m, ds, cols);
        }
        case KernelFamily::foci_cdf: {
            if (cols.size() != 1 || ds.column(cols[0]).type() != ColumnType::numeric)
                fail(errc::type_mismatch, "foci_cdf kernel expects a single numeric column");
            return pack_numeric(ds, cols);
        }
        default: {
            for (std::size_t c : cols) {
                if (ds.column(c).type() != ColumnType::numeric)
                    fail(errc::type_mismatch, "kernel family requires numeric columns");
            }
            return pack_numeric(ds, cols);
        }
    }
}

}  // namespace

ResolvedKernel resolve_kernel(const KernelSpec& spec, const Dataset& ds,
                              std::span<const std::size_t> cols) {
    return resolve_kernel(spec, pack_for_kernel(spec, ds, cols));
}

KernelEvaluator::KernelEvaluator(ResolvedKernel kernel, const Dataset& ds,
                                 std::span<const std::size_t> cols)
    : kernel_(std::move(kernel)), pts_(pack_for_kernel(kernel_.spec, ds, cols)) {
    if (kernel_.spec.family == KernelFamily::hist_inv ||
        kernel_.spec.family == KernelFamily::hist_expsqrt) {
        for (double v : pts_.data) {
            if (v < 0.0) fail(errc::type_mismatch, "histogram kernels expect nonnegative data");
        }
    }
}

KernelEvaluator::KernelEvaluator(ResolvedKernel kernel, PointMatrix pts)
    : kernel_(std::move(kernel)), pts_(std::move(pts)) {}

Eigen::MatrixXd gram_matrix(const KernelEvaluator& evaluator) {
    const std::size_t n = evaluator.n();
    Eigen::MatrixXd K(n, n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = evaluator.eval(i, j);
            K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    });
    return K;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Dataset& ds,
                            std::span<const std::size_t> cols) {
    const ResolvedKernel rk = resolve_kernel(spec, ds, cols);
    return gram_matrix(KernelEvaluator(rk, ds, cols));
}

}  // namespace kpc
