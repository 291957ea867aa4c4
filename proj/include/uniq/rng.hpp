#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>
#include <algorithm>

namespace uniq::rng {

// SplitMix64 finalizer. Full avalanche, so consecutive counters give
// statistically independent outputs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives a child stream key from a parent seed and up to two indices.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0) noexcept {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (a + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ (b + 0x9e3779b97f4a7c15ULL));
    return h;
}

// Counter-based generator: output i is a pure function of (key, i), so
// independent streams can be handed to concurrent workers and replayed
// bit-identically regardless of scheduling.
class Stream {
public:
    explicit Stream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept {
        return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform in (0,1), never exactly 0 or 1.
    double next_double() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound). Rejection keeps it unbiased.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    // Standard normal via Box-Muller.
    double next_normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_double();
        const double u2 = next_double();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * 3.14159265358979323846 * u2;
        spare_ = mag * std::sin(ang);
        has_spare_ = true;
        return mag * std::cos(ang);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Draws r distinct indices from [0, n) uniformly without replacement
// (Floyd's algorithm). Returned indices are sorted so downstream
// floating-point reductions are order-stable.
inline std::vector<std::size_t> sample_without_replacement(Stream& stream,
                                                           std::size_t n,
                                                           std::size_t r) {
    if (r > n) throw std::invalid_argument("sample_without_replacement: r > n");
    std::vector<std::size_t> out;
    out.reserve(r);
    if (r == n) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(r * 2);
    for (std::size_t j = n - r; j < n; ++j) {
        const std::size_t t = static_cast<std::size_t>(stream.next_below(j + 1));
        if (chosen.insert(t).second) {
            out.push_back(t);
        } else {
            chosen.insert(j);
            out.push_back(j);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace uniq::rng
