#include "kpc/rkhs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "kpc/error.hpp"

namespace kpc {

double RkhsConfig::eps_schedule(std::size_t n) {
    return 1e-3 * std::pow(static_cast<double>(n), -0.4);
}

Eigen::MatrixXd center_gram(const Eigen::MatrixXd& K) {
    if (K.rows() != K.cols()) fail(errc::invalid_argument, "center_gram expects a square matrix");
    const Eigen::VectorXd row_means = K.rowwise().mean();
    const double total_mean = row_means.mean();
    Eigen::MatrixXd out = K;
    out.colwise() -= row_means;
    out.rowwise() -= row_means.transpose();
    out.array() += total_mean;
    return out;
}

namespace {

// B = n*eps * (K + n*eps I)^-1, the smoother the estimator is built from
// (A = I - B is the corresponding regularized projection). An SPD solve
// covers the usual regime; when n*eps sits many orders below the matrix
// scale the solve loses the null-space directions, so we switch to an
// eigendecomposition and clamp eigenvalues at noise level to exactly zero.
Eigen::MatrixXd smoother(const Eigen::MatrixXd& K, double n_eps) {
    const auto n = K.rows();
    const double scale = K.trace();
    const bool tiny_eps = n_eps < 1e-7 * std::max(scale, 1e-300);
    if (!tiny_eps) {
        Eigen::MatrixXd shifted = K;
        shifted.diagonal().array() += n_eps;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(n, n) * n_eps;
            return llt.solve(rhs);
        }
        // Fall through: severely non-PSD input.
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    if (eig.info() != Eigen::Success) fail(errc::non_psd_gram, "eigendecomposition failed");
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double lmax = std::max(lambda.maxCoeff(), 0.0);
    if (lambda.minCoeff() < -1e-6 * std::max(lmax, 1.0))
        fail(errc::non_psd_gram, "Gram matrix is not positive semidefinite");
    const double noise = static_cast<double>(n) * 2.3e-16 * lmax;
    Eigen::VectorXd weights(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = lambda(i) <= noise ? 0.0 : lambda(i);
        weights(i) = n_eps / (l + n_eps);
    }
    return eig.eigenvectors() * weights.asDiagonal() * eig.eigenvectors().transpose();
}

struct TraceRatio {
    double numerator;
    double denominator;
};

KpcEstimate finish(TraceRatio tr, double ky_trace, bool clamp) {
    KpcEstimate est;
    const double scale = std::max(1.0, std::fabs(ky_trace));
    // Both traces are squared Frobenius norms in exact arithmetic; small
    // negative values are rounding and clamp to zero.
    if (tr.numerator < 0.0) {
        if (tr.numerator < -1e-8 * scale)
            fail(errc::non_psd_gram, "numerator trace is negative beyond tolerance");
        tr.numerator = 0.0;
    }
    est.numerator = tr.numerator;
    est.denominator = tr.denominator;
    if (tr.denominator < 1e-12 * scale)
        fail(errc::degenerate_denominator,
             "denominator trace vanishes: constant Y or pathologically large eps");
    est.value = tr.numerator / tr.denominator;
    if (clamp && est.value > 1.0) {
        est.value = 1.0;
        est.clamped = true;
    }
    return est;
}

std::vector<std::size_t> concat_cols(const VariableRoles& roles) {
    std::vector<std::size_t> cols = roles.x_cols;
    cols.insert(cols.end(), roles.z_cols.begin(), roles.z_cols.end());
    return cols;
}

KpcEstimate kpc_rkhs_impl(const Dataset& ds, const VariableRoles& roles, const RkhsConfig& cfg,
                          bool centered, bool clamp) {
    roles.validate(ds);
    const auto n = static_cast<Eigen::Index>(ds.n());
    const double dn = static_cast<double>(ds.n());

    Eigen::MatrixXd Ky = gram_matrix(cfg.kernel_y, ds, roles.y_cols);
    if (centered) Ky = center_gram(Ky);

    const std::vector<std::size_t> xz_cols = concat_cols(roles);
    Eigen::MatrixXd Kxz = gram_matrix(cfg.kernel_xz, ds, xz_cols);
    if (centered) Kxz = center_gram(Kxz);
    const Eigen::MatrixXd Bxz = smoother(Kxz, dn * cfg.eps2);

    // M = A_x - A_xz = B_xz - B_x (sign irrelevant under the quadratic form)
    // and N = I - A_x = B_x, in both the centered and uncentered variants.
    // With no conditioning columns K_x == 0, so B_x = I: the unconditional
    // form with N = I falls out without a special case.
    Eigen::MatrixXd M;
    Eigen::MatrixXd N;
    if (roles.x_cols.empty()) {
        M = Bxz - Eigen::MatrixXd::Identity(n, n);
        N = Eigen::MatrixXd::Identity(n, n);
    } else {
        Eigen::MatrixXd Kx = gram_matrix(cfg.kernel_x, ds, roles.x_cols);
        if (centered) Kx = center_gram(Kx);
        const Eigen::MatrixXd Bx = smoother(Kx, dn * cfg.eps1);
        M = Bxz - Bx;
        N = Bx;
    }

    TraceRatio tr;
    tr.numerator = (Ky * M).cwiseProduct(M).sum();
    tr.denominator = (Ky * N).cwiseProduct(N).sum();
    KpcEstimate est = finish(tr, Ky.trace(), clamp);
    est.diagnostics["eps1"] = cfg.eps1;
    est.diagnostics["eps2"] = cfg.eps2;
    return est;
}

}  // namespace

KpcEstimate kpc_rkhs(const Dataset& ds, const VariableRoles& roles, const RkhsConfig& cfg,
                     bool clamp) {
    return kpc_rkhs_impl(ds, roles, cfg, /*centered=*/true, clamp);
}

KpcEstimate kpc_rkhs_uncentered(const Dataset& ds, const VariableRoles& roles,
                                const RkhsConfig& cfg, bool clamp) {
    return kpc_rkhs_impl(ds, roles, cfg, /*centered=*/false, clamp);
}

CholFactor incomplete_cholesky(const KernelEvaluator& kernel, double tolerance, int max_rank) {
    const std::size_t n = kernel.n();
    std::vector<double> diag(n);
    double trace0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = kernel.eval(i, i);
        trace0 += diag[i];
    }
    if (tolerance < 0.0) tolerance = 1e-6 * trace0;
    std::size_t cap = (max_rank <= 0) ? n : std::min<std::size_t>(n, static_cast<std::size_t>(max_rank));

    CholFactor factor;
    Eigen::MatrixXd L(n, cap);
    double residual = trace0;
    std::size_t rank = 0;
    const double negative_slack = 1e-9 * std::max(trace0, 1.0);

    while (rank < cap && residual > tolerance) {
        std::size_t pivot = 0;
        double best = diag[0];
        for (std::size_t i = 1; i < n; ++i) {
            if (diag[i] > best) {
                best = diag[i];
                pivot = i;
            }
        }
        if (best <= 0.0) {
            if (best < -negative_slack)
                fail(errc::negative_diagonal, "incomplete Cholesky: residual diagonal is negative");
            break;
        }
        const double root = std::sqrt(best);
        for (std::size_t i = 0; i < n; ++i) {
            double v = kernel.eval(i, pivot);
            if (rank > 0)
                v -= L.row(static_cast<Eigen::Index>(i)).head(rank).dot(
                    L.row(static_cast<Eigen::Index>(pivot)).head(rank));
            L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(rank)) = v / root;
        }
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(rank));
            diag[i] -= l * l;
            residual += std::max(diag[i], 0.0);
        }
        factor.pivots.push_back(pivot);
        ++rank;
    }
    factor.L = L.leftCols(static_cast<Eigen::Index>(rank));
    factor.residual = std::max(residual, 0.0);
    return factor;
}

KpcEstimate kpc_rkhs_lowrank(const Dataset& ds, const VariableRoles& roles, const RkhsConfig& cfg,
                             bool clamp) {
    roles.validate(ds);
    const double dn = static_cast<double>(ds.n());
    const LowRankConfig lr = cfg.lowrank.value_or(LowRankConfig{});

    auto centered_factor = [&](const KernelSpec& spec,
                               std::span<const std::size_t> cols) -> Eigen::MatrixXd {
        const ResolvedKernel rk = resolve_kernel(spec, ds, cols);
        const KernelEvaluator evaluator(rk, ds, cols);
        CholFactor factor = incomplete_cholesky(evaluator, lr.tolerance, lr.max_rank);
        // HL without materializing H.
        factor.L.rowwise() -= factor.L.colwise().mean();
        return std::move(factor.L);
    };

    const Eigen::MatrixXd Ly = centered_factor(cfg.kernel_y, roles.y_cols);
    const std::vector<std::size_t> xz_cols = concat_cols(roles);
    const Eigen::MatrixXd Lxz = centered_factor(cfg.kernel_xz, xz_cols);

    // Ly^T A where A = L (n eps I + L^T L)^-1 L^T, via the Woodbury identity.
    auto projected = [&](const Eigen::MatrixXd& L, double n_eps) -> Eigen::MatrixXd {
        const Eigen::Index d = L.cols();
        Eigen::MatrixXd G = L.transpose() * L;
        G.diagonal().array() += n_eps;
        const Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success)
            fail(errc::non_psd_gram, "low-rank Gram factor is not positive definite");
        const Eigen::MatrixXd SyL = Ly.transpose() * L;           // d3 x d
        const Eigen::MatrixXd solved = llt.solve(SyL.transpose());  // d x d3
        return solved.transpose() * L.transpose();                 // d3 x n
    };

    const Eigen::MatrixXd Txz = projected(Lxz, dn * cfg.eps2);
    Eigen::MatrixXd Tx;
    if (roles.x_cols.empty()) {
        Tx = Eigen::MatrixXd::Zero(Ly.cols(), Ly.rows());
    } else {
        const Eigen::MatrixXd Lx = centered_factor(cfg.kernel_x, roles.x_cols);
        Tx = projected(Lx, dn * cfg.eps1);
    }

    TraceRatio tr;
    tr.numerator = (Tx - Txz).squaredNorm();
    tr.denominator = (Ly.transpose() - Tx).squaredNorm();
    KpcEstimate est = finish(tr, Ly.squaredNorm(), clamp);
    est.diagnostics["eps1"] = cfg.eps1;
    est.diagnostics["eps2"] = cfg.eps2;
    est.diagnostics["rank_y"] = static_cast<double>(Ly.cols());
    est.diagnostics["rank_xz"] = static_cast<double>(Lxz.cols());
    return est;
}

}  // namespace kpc
