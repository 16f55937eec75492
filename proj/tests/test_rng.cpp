#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "pcgkit/rng.hpp"

using namespace pcgkit;

TEST_CASE("same seed reproduces the stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(42), d(43);
    bool all_equal = true;
    for (int i = 0; i < 10; ++i) {
        all_equal = all_equal && c.next_u64() == d.next_u64();
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("below stays in range and reaches both ends") {
    Rng rng(7);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t v = rng.below(8);
        CHECK(v < 8);
        seen.insert(v);
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("unit values live in [0,1) with sane mean") {
    Rng rng(11);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("normal draws match requested moments") {
    Rng rng(13);
    const int n = 40000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(2.0, 3.0);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.03));
    CHECK(var == doctest::Approx(9.0).epsilon(0.05));
}

TEST_CASE("shuffle permutes without loss") {
    Rng rng(3);
    std::vector<int> values(50);
    std::iota(values.begin(), values.end(), 0);
    auto copy = values;
    rng.shuffle(copy);
    CHECK(copy != values);
    std::sort(copy.begin(), copy.end());
    CHECK(copy == values);

    Rng r1(9), r2(9);
    auto a = values, b = values;
    r1.shuffle(a);
    r2.shuffle(b);
    CHECK(a == b);
}

TEST_CASE("sample_indices draws k distinct indices") {
    Rng rng(5);
    const auto picks = rng.sample_indices(100, 10);
    CHECK(picks.size() == 10);
    std::set<std::size_t> unique(picks.begin(), picks.end());
    CHECK(unique.size() == 10);
    for (std::size_t p : picks) {
        CHECK(p < 100);
    }

    Rng full(5);
    const auto everything = full.sample_indices(6, 6);
    std::set<std::size_t> all(everything.begin(), everything.end());
    CHECK(all.size() == 6);
}

TEST_CASE("derive_seed separates streams deterministically") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));

    std::set<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 100; ++s) {
        seeds.insert(derive_seed(99, s));
    }
    CHECK(seeds.size() == 100);
}
