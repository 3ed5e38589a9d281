#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace tailgen {

/// Deterministic random stream. All draws are derived from mt19937_64 output
/// through fixed arithmetic, so a seed reproduces the same sequence bit-for-bit
/// on one platform (and across platforms up to libm differences in log/cos/sin).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; draws come in cached pairs.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Uniform integer in [0, n) by masked rejection; n must be positive.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t mask = ~std::uint64_t{0};
        std::uint64_t v = n - 1;
        v |= v >> 1; v |= v >> 2; v |= v >> 4; v |= v >> 8; v |= v >> 16; v |= v >> 32;
        mask = v;
        std::uint64_t r;
        do {
            r = eng_() & mask;
        } while (r >= n);
        return r;
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

namespace detail {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Seed-splitting rule: component seed = splitmix64(root XOR golden * fnv1a(tag)).
/// Every subsystem draws from its own tagged stream so pipelines stay
/// reproducible independently of each other.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    return detail::splitmix64(root ^ (detail::kGolden * detail::fnv1a64(tag)));
}

}  // namespace tailgen
