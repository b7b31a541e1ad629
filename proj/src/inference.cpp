#include "kpc/inference.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "kpc/error.hpp"
#include "kpc/graph_estimator.hpp"
#include "kpc/numeric.hpp"
#include "kpc/parallel.hpp"

namespace kpc {

GaussianLinearSampler::GaussianLinearSampler(double intercept, std::vector<double> coef,
                                             double sd)
    : intercept_(intercept), coef_(std::move(coef)), sd_(sd) {
    if (!(sd_ > 0.0)) fail(errc::invalid_argument, "sampler sd must be positive");
}

GaussianLinearSampler GaussianLinearSampler::fit(const Dataset& ds,
                                                 std::span<const std::size_t> x_cols,
                                                 std::size_t z_col) {
    const auto n = static_cast<Eigen::Index>(ds.n());
    const auto p = static_cast<Eigen::Index>(x_cols.size());
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& values = ds.column(x_cols[static_cast<std::size_t>(j)]).numeric().values;
        for (Eigen::Index i = 0; i < n; ++i)
            design(i, j + 1) = values[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd z(n);
    const auto& zv = ds.column(z_col).numeric().values;
    for (Eigen::Index i = 0; i < n; ++i) z(i) = zv[static_cast<std::size_t>(i)];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols()) fail(errc::rank_deficient, "sampler fit: X is rank deficient");
    const Eigen::VectorXd beta = qr.solve(z);
    const double dof = static_cast<double>(n - (p + 1));
    if (!(dof > 0.0)) fail(errc::invalid_argument, "sampler fit: too few rows");
    const double sd = std::sqrt((z - design * beta).squaredNorm() / dof);
    std::vector<double> coef(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) coef[static_cast<std::size_t>(j)] = beta(j + 1);
    return GaussianLinearSampler(beta(0), std::move(coef), sd);
}

void GaussianLinearSampler::draw(std::span<const double> x, RngStream& rng,
                                 std::span<double> z_out) const {
    if (x.size() != coef_.size()) fail(errc::size_mismatch, "sampler: x dimension mismatch");
    double mean = intercept_;
    for (std::size_t j = 0; j < coef_.size(); ++j) mean += coef_[j] * x[j];
    z_out[0] = rng.normal(mean, sd_);
}

namespace {

void require_numeric(const Dataset& ds, std::span<const std::size_t> cols, const char* what) {
    for (std::size_t c : cols) {
        if (ds.column(c).type() != ColumnType::numeric)
            fail(errc::type_mismatch, std::string(what) + " columns must be numeric");
    }
}

PointMatrix xz_points(const PointMatrix& x, const std::vector<double>& z_flat,
                      std::size_t z_dim) {
    PointMatrix out;
    out.n = x.n;
    out.dim = x.dim + z_dim;
    out.data.resize(out.n * out.dim);
    for (std::size_t i = 0; i < x.n; ++i) {
        std::copy_n(x.raw() + i * x.dim, x.dim, out.data.begin() + i * out.dim);
        std::copy_n(z_flat.data() + i * z_dim, z_dim, out.data.begin() + i * out.dim + x.dim);
    }
    return out;
}

}  // namespace

CrtResult crt_pvalue(const Dataset& ds, const VariableRoles& roles, const CrtConfig& cfg,
                     const ConditionalSampler& sampler, int b, std::uint64_t seed) {
    roles.validate(ds);
    if (b < 0) fail(errc::invalid_argument, "B must be >= 0");
    require_numeric(ds, roles.x_cols, "CRT x");
    require_numeric(ds, roles.z_cols, "CRT z");
    const std::size_t n = ds.n();
    const std::size_t z_dim = roles.z_cols.size();
    if (sampler.z_dim() != z_dim) fail(errc::size_mismatch, "sampler z dimension mismatch");

    const PointMatrix x_pts = pack_numeric(ds, roles.x_cols);
    std::vector<double> z_obs(n * z_dim);
    for (std::size_t j = 0; j < z_dim; ++j) {
        const auto& values = ds.column(roles.z_cols[j]).numeric().values;
        for (std::size_t i = 0; i < n; ++i) z_obs[i * z_dim + j] = values[i];
    }

    const ResolvedKernel ky = resolve_kernel(cfg.kernel_y, ds, roles.y_cols);
    const KernelEvaluator ky_eval(ky, ds, roles.y_cols);

    // A statistic evaluator over one Z realization; resample index 0 is the
    // observed data (its graph / gram seeds line up with the resamples).
    std::function<double(const std::vector<double>&, std::size_t)> statistic;

    // X-side structures shared across resamples.
    double t_x = 0.0;
    double diag_mean = 0.0;
    Eigen::MatrixXd Ky;
    Eigen::MatrixXd Bx;
    double den = 0.0;

    if (cfg.stat == CrtConfig::Stat::graph) {
        if (roles.x_cols.empty())
            fail(errc::invalid_argument, "graph CRT statistic requires conditioning columns");
        GraphSpec spec_x = GraphSpec::knn(cfg.k, cfg.directed);
        spec_x.seed = RngStream::derive_key(seed, {stream_tag::graph_x});
        const GeometricGraph gx = build_knn(spec_x, x_pts);
        t_x = t_n(ky_eval, gx);
        std::vector<double> diag(n);
        for (std::size_t i = 0; i < n; ++i) diag[i] = ky_eval.eval(i, i);
        diag_mean = pairwise_sum(diag) / static_cast<double>(n);
        const double scale = std::max(1.0, std::fabs(diag_mean));
        if (std::fabs(diag_mean - t_x) < 1e-12 * scale)
            fail(errc::degenerate_denominator, "CRT: Y degenerate given X");
        statistic = [&, spec_x](const std::vector<double>& z_flat, std::size_t resample) {
            GraphSpec spec_xz = GraphSpec::knn(cfg.k, cfg.directed);
            spec_xz.seed = RngStream::derive_key(seed, {stream_tag::graph_xz, resample});
            const GeometricGraph gxz = build_knn(spec_xz, xz_points(x_pts, z_flat, z_dim));
            const double t_xz = t_n(ky_eval, gxz);
            return (t_xz - t_x) / (diag_mean - t_x);
        };
    } else {
        Ky = center_gram(gram_matrix(ky_eval));
        const double dn = static_cast<double>(n);
        if (roles.x_cols.empty()) {
            Bx = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                           static_cast<Eigen::Index>(n));
        } else {
            Eigen::MatrixXd Kx =
                center_gram(gram_matrix(cfg.kernel_x, ds, roles.x_cols));
            Kx.diagonal().array() += dn * cfg.eps;
            Eigen::LLT<Eigen::MatrixXd> llt(Kx);
            if (llt.info() != Eigen::Success) fail(errc::non_psd_gram, "CRT: K_x solve failed");
            Bx = llt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                     static_cast<Eigen::Index>(n)) *
                           (dn * cfg.eps));
        }
        den = (Ky * Bx).cwiseProduct(Bx).sum();
        if (den < 1e-12 * std::max(1.0, std::fabs(Ky.trace())))
            fail(errc::degenerate_denominator, "CRT: denominator trace vanishes");
        statistic = [&](const std::vector<double>& z_flat, std::size_t) {
            const PointMatrix pts = xz_points(x_pts, z_flat, z_dim);
            const ResolvedKernel kxz = resolve_kernel(cfg.kernel_xz, pts);
            const KernelEvaluator exz(kxz, pts);
            Eigen::MatrixXd Kxz = center_gram(gram_matrix(exz));
            const double dn2 = static_cast<double>(n);
            Kxz.diagonal().array() += dn2 * cfg.eps;
            Eigen::LLT<Eigen::MatrixXd> llt(Kxz);
            if (llt.info() != Eigen::Success)
                fail(errc::non_psd_gram, "CRT: K_xz solve failed");
            const Eigen::MatrixXd Bxz =
                llt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n)) *
                          (dn2 * cfg.eps));
            const Eigen::MatrixXd M = Bxz - Bx;
            const double num = (Ky * M).cwiseProduct(M).sum();
            return std::max(num, 0.0) / den;
        };
    }

    const double observed = statistic(z_obs, 0);
    std::vector<double> resampled(static_cast<std::size_t>(b));
    parallel_for(static_cast<std::size_t>(b), [&](std::size_t j) {
        std::vector<double> z_flat(n * z_dim);
        for (std::size_t i = 0; i < n; ++i) {
            RngStream rng = RngStream::from(seed, {stream_tag::resample, j + 1, i});
            sampler.draw(x_pts.row(i), rng, {z_flat.data() + i * z_dim, z_dim});
        }
        resampled[j] = statistic(z_flat, j + 1);
    });

    std::size_t deg = 0;
    for (double t : resampled) {
        if (t >= observed) ++deg;
    }
    CrtResult result;
    result.statistic = observed;
    result.b = b;
    result.pvalue = static_cast<double>(1 + deg) / static_cast<double>(1 + b);
    return result;
}

// ---------------------------------------------------------------------------
// Knockoffs
// ---------------------------------------------------------------------------

namespace {

constexpr int kNoSkip = -1;

// Squared distance over the interleaved [X_1, X~_1, ..., X_p, X~_p] rows.
// Each pair's two contributions are added together before entering the
// accumulator, so swapping a pair's columns cannot change the result, and
// dropping one member leaves every other term's position intact. That makes
// the flip-sign property exact in floating point, not just in expectation.
double aug_sqdist(const double* a, const double* b, std::size_t p, int skip) {
    double acc = 0.0;
    for (std::size_t t = 0; t < p; ++t) {
        const double d0 = a[2 * t] - b[2 * t];
        const double d1 = a[2 * t + 1] - b[2 * t + 1];
        const int s0 = static_cast<int>(2 * t);
        if (skip == s0) {
            acc += d1 * d1;
        } else if (skip == s0 + 1) {
            acc += d0 * d0;
        } else {
            acc += d0 * d0 + d1 * d1;
        }
    }
    return acc;
}

Eigen::MatrixXd interleave(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xk) {
    Eigen::MatrixXd aug(x.rows(), 2 * x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        aug.col(2 * j) = x.col(j);
        aug.col(2 * j + 1) = xk.col(j);
    }
    return aug;
}

}  // namespace

std::vector<double> knockoff_w(const KnockoffInput& ki, const KnockoffStatConfig& cfg,
                               std::uint64_t seed) {
    const auto n = ki.x.rows();
    const auto p = ki.x.cols();
    if (ki.x_knock.rows() != n || ki.x_knock.cols() != p)
        fail(errc::size_mismatch, "knockoff matrix shape mismatch");
    if (ki.y.size() != n) fail(errc::size_mismatch, "response length mismatch");

    // Row-major augmented matrix, interleaved by pair.
    const Eigen::MatrixXd aug = interleave(ki.x, ki.x_knock);
    const auto np = static_cast<std::size_t>(n);
    const auto pp = static_cast<std::size_t>(p);
    std::vector<double> aug_rows(np * 2 * pp);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < 2 * p; ++c)
            aug_rows[static_cast<std::size_t>(i) * 2 * pp + static_cast<std::size_t>(c)] =
                aug(i, c);
    }
    auto row_ptr = [&](std::size_t i) { return aug_rows.data() + i * 2 * pp; };

    PointMatrix y_pts;
    y_pts.n = np;
    y_pts.dim = 1;
    y_pts.data.assign(ki.y.data(), ki.y.data() + n);
    const ResolvedKernel ky = resolve_kernel(cfg.kernel_y, y_pts);
    const KernelEvaluator ky_eval(ky, std::move(y_pts));

    std::vector<double> diag(np);
    for (std::size_t i = 0; i < np; ++i) diag[i] = ky_eval.eval(i, i);
    const double diag_mean = pairwise_sum(diag) / static_cast<double>(np);

    if (cfg.stat == KnockoffStatConfig::Stat::graph) {
        auto t_for_skip = [&](int skip, std::uint64_t graph_seed) {
            const GeometricGraph g = build_knn_custom(
                np, cfg.k, /*directed=*/true, graph_seed,
                [&](std::size_t i, std::size_t j) {
                    return aug_sqdist(row_ptr(i), row_ptr(j), pp, skip);
                });
            return t_n(ky_eval, g);
        };
        const double t_full =
            t_for_skip(kNoSkip, RngStream::derive_key(seed, {stream_tag::knockoff}));
        std::vector<double> w(pp);
        parallel_for(pp, [&](std::size_t j) {
            // Both members of pair j share one tie stream so the graphs match
            // bit-for-bit across a swap.
            const std::uint64_t drop_seed =
                RngStream::derive_key(seed, {stream_tag::drop_column, j});
            auto term = [&](int skip) {
                const double t_drop = t_for_skip(skip, drop_seed);
                const double den = diag_mean - t_drop;
                if (std::fabs(den) < 1e-12 * std::max(1.0, std::fabs(diag_mean)))
                    fail(errc::degenerate_denominator, "knockoff statistic: degenerate denominator");
                return (t_full - t_drop) / den;
            };
            w[j] = term(static_cast<int>(2 * j)) - term(static_cast<int>(2 * j + 1));
        });
        return w;
    }

    // RKHS statistic: shared fixed Gaussian bandwidth on the X side.
    if (!(cfg.x_bandwidth > 0.0))
        fail(errc::asymmetric_config,
             "rkhs knockoff statistic requires a fixed x-side bandwidth");
    const double two_s2 = 2.0 * cfg.x_bandwidth * cfg.x_bandwidth;
    auto gram_for_skip = [&](int skip) {
        Eigen::MatrixXd K(n, n);
        for (std::size_t i = 0; i < np; ++i) {
            for (std::size_t j = i; j < np; ++j) {
                const double v = std::exp(-aug_sqdist(row_ptr(i), row_ptr(j), pp, skip) / two_s2);
                K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            }
        }
        return center_gram(K);
    };
    const Eigen::MatrixXd Ky = center_gram(gram_matrix(ky_eval));
    const double ky_scale = std::max(1.0, std::fabs(Ky.trace()));
    const double ne = static_cast<double>(n) * cfg.eps;
    auto smooth = [&](Eigen::MatrixXd K) {
        K.diagonal().array() += ne;
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() != Eigen::Success)
            fail(errc::non_psd_gram, "knockoff statistic: solve failed");
        return llt.solve(Eigen::MatrixXd::Identity(n, n) * ne).eval();
    };
    const Eigen::MatrixXd B_full = smooth(gram_for_skip(kNoSkip));
    std::vector<double> w(pp);
    parallel_for(pp, [&](std::size_t j) {
        auto term = [&](int skip) {
            const Eigen::MatrixXd B_drop = smooth(gram_for_skip(skip));
            const Eigen::MatrixXd M = B_full - B_drop;
            const double num = std::max((Ky * M).cwiseProduct(M).sum(), 0.0);
            const double den = (Ky * B_drop).cwiseProduct(B_drop).sum();
            if (den < 1e-12 * ky_scale)
                fail(errc::degenerate_denominator, "knockoff statistic: degenerate denominator");
            return num / den;
        };
        w[j] = term(static_cast<int>(2 * j)) - term(static_cast<int>(2 * j + 1));
    });
    return w;
}

KnockoffSelection knockoff_select(std::span<const double> w, double q, bool plus) {
    if (!(q > 0.0 && q < 1.0)) fail(errc::invalid_argument, "q must lie in (0,1)");
    std::vector<double> candidates;
    for (double v : w) {
        if (v != 0.0) candidates.push_back(std::fabs(v));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    KnockoffSelection sel;
    for (double t : candidates) {
        std::size_t neg = 0;
        std::size_t pos = 0;
        for (double v : w) {
            if (v <= -t) ++neg;
            if (v >= t) ++pos;
        }
        if (pos == 0) continue;
        const double ratio =
            (static_cast<double>(plus ? 1 : 0) + static_cast<double>(neg)) /
            static_cast<double>(pos);
        if (ratio <= q) {
            sel.threshold = t;
            for (std::size_t j = 0; j < w.size(); ++j) {
                if (w[j] >= t) sel.selected.push_back(j);
            }
            return sel;
        }
    }
    return sel;
}

Eigen::MatrixXd gaussian_knockoffs(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& cov, std::uint64_t seed) {
    const auto n = x.rows();
    const auto p = x.cols();
    if (mean.size() != p || cov.rows() != p || cov.cols() != p)
        fail(errc::size_mismatch, "gaussian_knockoffs: shape mismatch");

    Eigen::LLT<Eigen::MatrixXd> cov_llt(cov);
    if (cov_llt.info() != Eigen::Success)
        fail(errc::not_positive_definite, "covariance must be positive definite");

    // Equicorrelated construction on the correlation scale, mapped back.
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    const Eigen::MatrixXd corr =
        sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> corr_eig(corr);
    const double lmin = corr_eig.eigenvalues().minCoeff();
    if (!(lmin > 0.0)) fail(errc::not_positive_definite, "correlation matrix is singular");
    const double s_corr = std::min(2.0 * lmin, 1.0);
    const Eigen::VectorXd s = s_corr * cov.diagonal();

    const Eigen::MatrixXd cov_inv_s = cov_llt.solve(Eigen::MatrixXd(s.asDiagonal()));
    Eigen::MatrixXd cond_cov = 2.0 * Eigen::MatrixXd(s.asDiagonal()) -
                               s.asDiagonal() * cov_inv_s;
    // Symmetrize and take a PSD square root (the factor can be singular when
    // s hits the 2*lambda_min corner).
    cond_cov = 0.5 * (cond_cov + cond_cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cc_eig(cond_cov);
    Eigen::VectorXd roots = cc_eig.eigenvalues();
    for (Eigen::Index i = 0; i < roots.size(); ++i) roots(i) = std::sqrt(std::max(roots(i), 0.0));
    const Eigen::MatrixXd half =
        cc_eig.eigenvectors() * roots.asDiagonal() * cc_eig.eigenvectors().transpose();

    Eigen::MatrixXd knock(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd centered = x.row(i).transpose() - mean;
        const Eigen::VectorXd cond_mean =
            x.row(i).transpose() - s.asDiagonal() * cov_llt.solve(centered);
        RngStream rng = RngStream::from(seed, {stream_tag::knockoff, static_cast<std::uint64_t>(i)});
        Eigen::VectorXd g(p);
        for (Eigen::Index j = 0; j < p; ++j) g(j) = rng.normal();
        knock.row(i) = (cond_mean + half * g).transpose();
    }
    return knock;
}

}  // namespace kpc
