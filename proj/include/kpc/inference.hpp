#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "kpc/dataset.hpp"
#include "kpc/geom_graph.hpp"
#include "kpc/kernel.hpp"
#include "kpc/rkhs.hpp"
#include "kpc/rng.hpp"

namespace kpc {

// Draws Z | X = x. Distinct rows receive independent streams.
class ConditionalSampler {
  public:
    virtual ~ConditionalSampler() = default;
    virtual std::size_t z_dim() const = 0;
    virtual void draw(std::span<const double> x, RngStream& rng,
                      std::span<double> z_out) const = 0;
};

// Z | X = x ~ N(intercept + coef . x, sd^2); the CLI convenience sampler,
// with a fit helper for when the linear model is taken as known.
class GaussianLinearSampler final : public ConditionalSampler {
  public:
    GaussianLinearSampler(double intercept, std::vector<double> coef, double sd);
    static GaussianLinearSampler fit(const Dataset& ds, std::span<const std::size_t> x_cols,
                                     std::size_t z_col);

    std::size_t z_dim() const override { return 1; }
    void draw(std::span<const double> x, RngStream& rng, std::span<double> z_out) const override;

  private:
    double intercept_;
    std::vector<double> coef_;
    double sd_;
};

struct CrtConfig {
    enum class Stat { graph, rkhs };
    Stat stat = Stat::rkhs;
    // graph statistic
    int k = 1;
    bool directed = true;
    // shared
    KernelSpec kernel_y = KernelSpec::gaussian_gamma(1.0);
    // rkhs statistic
    double eps = 1e-3;
    KernelSpec kernel_x = KernelSpec::gaussian_gamma(1.0);
    KernelSpec kernel_xz = KernelSpec::gaussian_gamma(0.5);
};

struct CrtResult {
    double pvalue = 1.0;
    double statistic = 0.0;
    int b = 0;
};

// Model-X conditional randomization test of Y indep Z | X:
//   p = (1 + #{j : T^(j) >= T}) / (1 + B)
// with weak inequality. X-side structures (X graph, centered K_X smoother)
// are computed once and reused across resamples; only Z changes.
CrtResult crt_pvalue(const Dataset& ds, const VariableRoles& roles, const CrtConfig& cfg,
                     const ConditionalSampler& sampler, int b, std::uint64_t seed);

struct KnockoffInput {
    Eigen::MatrixXd x;        // n x p
    Eigen::MatrixXd x_knock;  // n x p
    Eigen::VectorXd y;
    double q = 0.1;
};

struct KnockoffStatConfig {
    enum class Stat { graph, rkhs };
    Stat stat = Stat::graph;
    int k = 1;
    KernelSpec kernel_y = KernelSpec::gaussian();  // Y-side; median allowed (Y never swaps)
    // rkhs statistic: fixed bandwidths are required on the X side so swapped
    // and unswapped inputs see the same kernel (AsymmetricConfig otherwise).
    double eps = 1e-3;
    double x_bandwidth = 1.0;
};

// W_j = rho^2(Y, X_j | [X_-j, X~]) - rho^2(Y, X~_j | [X, X~_-j]). Columns are
// assembled in interleaved pair order and distances accumulate per pair, so
// swapping X_j with X~_j negates W_j and leaves W_k (k != j) unchanged at the
// bit level on tie-free data.
std::vector<double> knockoff_w(const KnockoffInput& ki, const KnockoffStatConfig& cfg,
                               std::uint64_t seed = 0);

struct KnockoffSelection {
    std::vector<std::size_t> selected;
    double threshold = 0.0;  // 0 when nothing qualifies
};

// Threshold search over t in {|W_j| : W_j != 0}:
//   tau  = min{t : #{W_j <= -t} / #{W_j >= t} <= q}          (plus = false)
//   tau+ = min{t : (1 + #{W_j <= -t}) / #{W_j >= t} <= q}    (plus = true)
KnockoffSelection knockoff_select(std::span<const double> w, double q, bool plus);

// Equicorrelated Gaussian knockoffs for X ~ N(mean, cov):
//   X~ | X ~ N(X - S cov^-1 (X - mean), 2S - S cov^-1 S),
// S = diag(s), s_j = min(2 lambda_min(corr(cov)), 1) * cov_jj.
Eigen::MatrixXd gaussian_knockoffs(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& cov, std::uint64_t seed);

}  // namespace kpc
