#include "pcgkit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pcgkit {

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("Rng::below: bound must be positive");
    }
    // Reject the tail that would bias the modulo.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % bound;
}

double Rng::unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1 = unit();
    while (u1 <= 0.0) {
        u1 = unit();
    }
    const double u2 = unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(angle);
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
    if (k > n) {
        throw std::invalid_argument("Rng::sample_indices: k exceeds n");
    }
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) {
        pool[i] = i;
    }
    // Partial Fisher-Yates: the first k slots end up holding the sample.
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 over (master, stream); decorrelates adjacent streams.
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace pcgkit
