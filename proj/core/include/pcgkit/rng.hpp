#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace pcgkit {

// Seedable random source used for every randomized step (balancing, fold
// shuffling, synthetic data). Built on std::mt19937_64, whose output stream
// is fixed by the standard; the sampling helpers below are implemented here
// instead of <random> distributions so that results are identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static constexpr std::string_view name() { return "mt19937_64"; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, bound) by rejection sampling; bound > 0.
    std::uint64_t below(std::uint64_t bound);

    // Uniform double in [0, 1) with 53-bit resolution.
    double unit();

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Box-Muller transform; the spare value is cached.
    double normal(double mean, double stddev);

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    // k distinct indices from [0, n), in selection order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stream-indexed child seed (splitmix64 mixing), so parallel runs draw from
// independent deterministic streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

} // namespace pcgkit
