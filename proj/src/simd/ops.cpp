#include "kpc/simd/ops.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace kpc::simd {

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double l1dist_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void sqdist_row_scalar(const double* q, const double* points, std::size_t count,
                       std::size_t dim, double* out) {
    for (std::size_t j = 0; j < count; ++j) out[j] = sqdist_scalar(q, points + j * dim, dim);
}

}  // namespace detail

namespace {

struct OpsTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    double (*l1dist)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*sqdist_row)(const double*, const double*, std::size_t, std::size_t, double*);
};

constexpr OpsTable kScalarTable = {
    detail::dot_scalar, detail::sqdist_scalar, detail::l1dist_scalar,
    detail::sum_scalar, detail::sqdist_row_scalar,
};

#if defined(__x86_64__) || defined(_M_X64)
constexpr OpsTable kAvx2Table = {
    detail::dot_avx2, detail::sqdist_avx2, detail::l1dist_avx2,
    detail::sum_avx2, detail::sqdist_row_avx2,
};

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }
#else
bool avx2_supported() { return false; }
#endif

Isa detect_isa() {
    if (const char* env = std::getenv("KPC_SIMD"); env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    }
    return avx2_supported() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa> g_isa{detect_isa()};

const OpsTable& table() {
#if defined(__x86_64__) || defined(_M_X64)
    return g_isa.load(std::memory_order_relaxed) == Isa::avx2 ? kAvx2Table : kScalarTable;
#else
    return kScalarTable;
#endif
}

}  // namespace

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (isa == Isa::avx2 && !avx2_supported()) isa = Isa::scalar;
    g_isa.store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double dot(std::span<const double> a, std::span<const double> b) {
    return table().dot(a.data(), b.data(), a.size());
}

double sqdist(std::span<const double> a, std::span<const double> b) {
    return table().sqdist(a.data(), b.data(), a.size());
}

double l1dist(std::span<const double> a, std::span<const double> b) {
    return table().l1dist(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return table().sum(a.data(), a.size()); }

void sqdist_row(std::span<const double> q, const double* points, std::size_t count,
                std::size_t dim, double* out) {
    table().sqdist_row(q.data(), points, count, dim, out);
}

}  // namespace kpc::simd
