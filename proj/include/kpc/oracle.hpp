#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kpc/dataset.hpp"
#include "kpc/kernel.hpp"
#include "kpc/rng.hpp"

namespace kpc {

// Finite discrete joint distribution of scalar (x, y, z); the ground-truth
// reference the estimators are checked against.
struct DiscreteJoint {
    struct Atom {
        double x;
        double y;
        double z;
        double p;
    };
    std::vector<Atom> atoms;

    void validate() const;
    Dataset sample(std::size_t n, RngStream& rng) const;  // columns x, y, z
};

using ScalarKernel = std::function<double(double, double)>;

ScalarKernel scalar_kernel(const KernelSpec& spec);
// foci_cdf with the joint's exact Y marginal as the (weighted) reference.
ScalarKernel scalar_foci_kernel(const DiscreteJoint& dj);

// Exact enumeration of
//   rho^2 = (E E[k(Y2,Y2')|X,Z] - E E[k(Y1,Y1')|X]) / (E k(Y,Y) - E E[k(Y1,Y1')|X])
// over the support, Kahan-summed.
double population_rho2(const DiscreteJoint& dj, const ScalarKernel& kernel);

// Independent enumeration of the Azadkia-Chatterjee functional
//   T(Y,Z|X) = int E[Var(P(Y>=t|Z,X)|X)] dP_Y(t) / int E[Var(1{Y>=t}|X)] dP_Y(t).
double ac_functional(const DiscreteJoint& dj);

// Correlation of the OLS residuals of Y-on-X and Z-on-X (intercept included).
double classical_partial_correlation(const Dataset& ds, std::size_t y_col, std::size_t z_col,
                                     std::span<const std::size_t> x_cols);

enum class ProbeFamily { gaussian_parcor, lambda_mixture };

struct ProbePoint {
    double parameter;
    double estimate;   // mean graph estimate across replications
    double std_error;  // Monte Carlo standard error of the mean
};

struct ProbeConfig {
    std::size_t n = 100000;
    std::size_t replications = 5;
    double noise_sd = 0.25;  // lambda_mixture only
    std::uint64_t seed = 0;
};

// Large-n Monte Carlo estimates of the population coefficient along a sorted
// parameter grid, via the 1-NN graph estimator; used for the monotonicity
// assertions.
std::vector<ProbePoint> monotonicity_probe(ProbeFamily family, std::span<const double> grid,
                                           const KernelSpec& kernel_y, const ProbeConfig& cfg);

}  // namespace kpc
