#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

namespace kpc {

// Stream-splittable PRNG. A stream is identified by a 64-bit key; child
// streams are derived by hashing (key, tag...) so that replication r, node i
// and resample j all get independent streams from one master seed, and
// results do not depend on thread scheduling.
//
// Engine: xoshiro256++ seeded via SplitMix64. Distributions are hand-rolled
// so output is identical across standard libraries.
class RngStream {
  public:
    explicit RngStream(std::uint64_t key) {
        std::uint64_t sm = key;
        for (auto& word : state_) word = splitmix64(sm);
    }

    static std::uint64_t derive_key(std::uint64_t parent, std::initializer_list<std::uint64_t> tags) {
        std::uint64_t key = parent;
        for (std::uint64_t tag : tags) {
            key ^= 0x9e3779b97f4a7c15ULL + tag;
            key = splitmix64(key);
        }
        return key;
    }

    static RngStream from(std::uint64_t parent, std::initializer_list<std::uint64_t> tags) {
        return RngStream(derive_key(parent, tags));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) (Lemire's method).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    // Floyd's algorithm: m distinct indices from [0, n), order randomized.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m);

  private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

namespace stream_tag {
// Fixed tags for deriving child streams; values are arbitrary but frozen.
inline constexpr std::uint64_t replication = 1;
inline constexpr std::uint64_t node = 2;
inline constexpr std::uint64_t resample = 3;
inline constexpr std::uint64_t graph_x = 4;
inline constexpr std::uint64_t graph_xz = 5;
inline constexpr std::uint64_t knockoff = 6;
inline constexpr std::uint64_t simulate = 7;
inline constexpr std::uint64_t drop_column = 8;
}  // namespace stream_tag

}  // namespace kpc
