#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kpc {

// Order-fixed pairwise summation; result is independent of thread count as
// long as the inputs are, and more accurate than a running sum.
double pairwise_sum(std::span<const double> values);

double kahan_sum(std::span<const double> values);

// Median with the even-count convention (mean of the two middle values).
// Mutates its argument (partial sorts).
double median_inplace(std::vector<double>& values);

}  // namespace kpc
