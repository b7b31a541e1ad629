#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner-loop primitives behind the distance, kernel and graph
// code. Every op has a scalar reference implementation and an AVX2 variant;
// the active one is picked at runtime (CPU detection, overridable via
// force_isa or the KPC_SIMD=scalar environment variable). The two variants
// are equivalence-tested against each other.
namespace kpc::simd {

enum class Isa { scalar, avx2 };

Isa active_isa();
void force_isa(Isa isa);
const char* isa_name(Isa isa);

// sum_i a[i] * b[i]
double dot(std::span<const double> a, std::span<const double> b);

// sum_i (a[i] - b[i])^2
double sqdist(std::span<const double> a, std::span<const double> b);

// sum_i |a[i] - b[i]|
double l1dist(std::span<const double> a, std::span<const double> b);

// sum_i a[i]
double sum(std::span<const double> a);

// out[j] = sum_d (q[d] - points[j*dim + d])^2 for j in [0, count).
// `points` is row-major with `dim` doubles per row.
void sqdist_row(std::span<const double> q, const double* points, std::size_t count,
                std::size_t dim, double* out);

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
double sqdist_scalar(const double* a, const double* b, std::size_t n);
double l1dist_scalar(const double* a, const double* b, std::size_t n);
double sum_scalar(const double* a, std::size_t n);
void sqdist_row_scalar(const double* q, const double* points, std::size_t count,
                       std::size_t dim, double* out);

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
double sqdist_avx2(const double* a, const double* b, std::size_t n);
double l1dist_avx2(const double* a, const double* b, std::size_t n);
double sum_avx2(const double* a, std::size_t n);
void sqdist_row_avx2(const double* q, const double* points, std::size_t count,
                     std::size_t dim, double* out);
#endif

}  // namespace detail

}  // namespace kpc::simd
