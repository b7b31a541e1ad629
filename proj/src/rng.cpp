#include "kpc/rng.hpp"

#include <unordered_set>

namespace kpc {

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t n, std::size_t m) {
    std::vector<std::size_t> picked;
    if (m == 0 || n == 0) return picked;
    if (m >= n) {
        picked.resize(n);
        for (std::size_t i = 0; i < n; ++i) picked[i] = i;
        shuffle(std::span<std::size_t>(picked));
        return picked;
    }
    picked.reserve(m);
    std::unordered_set<std::size_t> seen;
    seen.reserve(m * 2);
    // Floyd's algorithm: O(m) draws, uniform over m-subsets.
    for (std::size_t j = n - m; j < n; ++j) {
        std::size_t t = static_cast<std::size_t>(below(j + 1));
        if (seen.contains(t)) t = j;
        seen.insert(t);
        picked.push_back(t);
    }
    return picked;
}

}  // namespace kpc
