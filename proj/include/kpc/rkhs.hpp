#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "kpc/dataset.hpp"
#include "kpc/graph_estimator.hpp"
#include "kpc/kernel.hpp"

namespace kpc {

struct LowRankConfig {
    double tolerance = -1.0;  // < 0: default 1e-6 * trace(K); 0: exact
    int max_rank = -1;        // <= 0: n
};

struct RkhsConfig {
    double eps1 = 1e-3;  // regularizer for the X solve
    double eps2 = 1e-3;  // regularizer for the (X,Z) solve
    KernelSpec kernel_y = KernelSpec::gaussian();
    KernelSpec kernel_x = KernelSpec::gaussian();
    KernelSpec kernel_xz = KernelSpec::gaussian();
    std::optional<LowRankConfig> lowrank;

    RkhsConfig& eps(double e) {
        eps1 = e;
        eps2 = e;
        return *this;
    }

    // The consistency schedule eps_n = 1e-3 * n^{-0.4}.
    static double eps_schedule(std::size_t n);
};

// HKH with H = I - (1/n) 1 1^T; every row and column of the result sums to 0.
Eigen::MatrixXd center_gram(const Eigen::MatrixXd& K);

// RKHS estimate via centered Gram matrices and Tikhonov-regularized solves:
// value = Tr(M^T Ky~ M) / Tr(N^T Ky~ N) with
//   M = Kx~ (Kx~ + n e1 I)^-1 - Kxz~ (Kxz~ + n e2 I)^-1,
//   N = I - Kx~ (Kx~ + n e1 I)^-1.
// Empty x_cols uses the unconditional form (M built from the Z matrix alone,
// N = I). The raw value is always >= 0 and may exceed 1; clamping optional.
KpcEstimate kpc_rkhs(const Dataset& ds, const VariableRoles& roles, const RkhsConfig& cfg,
                     bool clamp = false);

// Same contracts with uncentered Gram matrices.
KpcEstimate kpc_rkhs_uncentered(const Dataset& ds, const VariableRoles& roles,
                                const RkhsConfig& cfg, bool clamp = false);

struct CholFactor {
    Eigen::MatrixXd L;  // n x d, L L^T ~= K
    std::vector<std::size_t> pivots;
    double residual = 0.0;  // trace(K - L L^T) at stop
};

// Greedy diagonally-pivoted incomplete Cholesky; runs matrix-free off the
// evaluator in O(n d^2). Stops at the trace-residual tolerance or rank cap.
CholFactor incomplete_cholesky(const KernelEvaluator& kernel, double tolerance = -1.0,
                               int max_rank = -1);

// Low-rank path: incomplete Cholesky factors, centered as L~ = HL, pushed
// through the Woodbury identity so nothing n x n is materialized.
KpcEstimate kpc_rkhs_lowrank(const Dataset& ds, const VariableRoles& roles,
                             const RkhsConfig& cfg, bool clamp = false);

}  // namespace kpc
