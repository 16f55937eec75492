#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "pcgkit/preprocess.hpp"
#include "pcgkit/rng.hpp"
#include "pcgkit/segmentation.hpp"
#include "pcgkit/synth.hpp"

using namespace pcgkit;

namespace {

std::vector<double> noise_burst_signal(std::size_t n, std::size_t burst_begin,
                                       std::size_t burst_end, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double amp = (i >= burst_begin && i < burst_end) ? 0.8 : 0.005;
        x[i] = rng.normal(0.0, amp);
    }
    return x;
}

std::vector<std::pair<std::uint8_t, std::size_t>>
state_runs(const StateSequence& states) {
    std::vector<std::pair<std::uint8_t, std::size_t>> runs;
    for (std::size_t i = 0; i < states.labels.size();) {
        std::size_t j = i;
        while (j < states.labels.size() && states.labels[j] == states.labels[i]) {
            ++j;
        }
        runs.push_back({states.labels[i], j - i});
        i = j;
    }
    return runs;
}

} // namespace

TEST_CASE("zero signal yields a flagged flat envelope") {
    const std::vector<double> zeros(3000, 0.0);
    const Envelope env = compute_envelope(zeros, 1000.0);
    CHECK(env.flat);
    for (double v : env.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("envelope peaks inside a noise burst") {
    const auto x = noise_burst_signal(3000, 1400, 1600, 42);
    const Envelope env = compute_envelope(x, 1000.0);
    CHECK_FALSE(env.flat);
    REQUIRE(env.values.size() == x.size());

    std::size_t argmax = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < env.values.size(); ++i) {
        CHECK(env.values[i] >= 0.0);
        CHECK(env.values[i] <= 1.0);
        if (env.values[i] > best) {
            best = env.values[i];
            argmax = i;
        }
    }
    CHECK(best == doctest::Approx(1.0));
    CHECK(argmax >= 1400);
    CHECK(argmax < 1600);
}

TEST_CASE("two equal bursts give two comparable peaks") {
    Rng rng(43);
    std::vector<double> x(4000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool in_a = i >= 800 && i < 1000;
        const bool in_b = i >= 2800 && i < 3000;
        x[i] = rng.normal(0.0, (in_a || in_b) ? 0.8 : 0.005);
    }
    const Envelope env = compute_envelope(x, 1000.0);
    auto peak_in = [&](std::size_t lo, std::size_t hi) {
        double best = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            best = std::max(best, env.values[i]);
        }
        return best;
    };
    const double pa = peak_in(700, 1100);
    const double pb = peak_in(2700, 3100);
    // The bursts share a level but not a noise realization, so allow the
    // smoothed peaks a modest spread.
    CHECK(std::abs(pa - pb) <= 0.15 * std::max(pa, pb));
}

TEST_CASE("heart rate recovered from periodic envelopes") {
    auto periodic_signal = [](double period_s, std::size_t n) {
        std::vector<double> x(n, 0.0);
        Rng rng(44);
        const auto period = static_cast<std::size_t>(period_s * 1000.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t phase = i % period;
            const double amp = phase < 100 ? 0.8 : 0.004;
            x[i] = rng.normal(0.0, amp);
        }
        return x;
    };

    const Envelope fast = compute_envelope(periodic_signal(0.5, 6000), 1000.0);
    const HeartRateEstimate hr_fast = estimate_heart_rate(fast);
    CHECK_FALSE(hr_fast.low_confidence);
    CHECK(hr_fast.beats_per_minute == doctest::Approx(120.0).epsilon(5.0 / 120.0));

    const Envelope slow = compute_envelope(periodic_signal(0.8, 8000), 1000.0);
    const HeartRateEstimate hr_slow = estimate_heart_rate(slow);
    CHECK_FALSE(hr_slow.low_confidence);
    CHECK(hr_slow.beats_per_minute == doctest::Approx(75.0).epsilon(3.0 / 75.0));
}

TEST_CASE("flat envelope falls back to defaults") {
    Envelope env;
    env.values.assign(4000, 0.0);
    env.sample_rate = 1000.0;
    env.flat = true;
    const HeartRateEstimate hr = estimate_heart_rate(env);
    CHECK(hr.low_confidence);
    CHECK(hr.beats_per_minute == doctest::Approx(75.0));
    CHECK(hr.systole_fraction == doctest::Approx(0.35));
}

TEST_CASE("decode labels a synthetic record mostly correctly") {
    SynthConfig config;
    config.duration_s = 6.0;
    Rng rng(45);
    const SynthRecord record = synth_record(config, Label::normal, rng);
    const PreprocessResult pre =
        preprocess(record.samples, config.sample_rate);
    const StateSequence decoded = segment(pre.samples, pre.sample_rate);
    REQUIRE(decoded.labels.size() == record.truth.labels.size());
    validate_state_sequence(decoded);

    std::size_t agree = 0;
    for (std::size_t i = 0; i < decoded.labels.size(); ++i) {
        agree += decoded.labels[i] == record.truth.labels[i];
    }
    const double frac =
        static_cast<double>(agree) / static_cast<double>(decoded.labels.size());
    CHECK(frac >= 0.9);
}

TEST_CASE("decoded S1 and S2 run lengths respect the duration priors") {
    SynthConfig config;
    config.duration_s = 6.0;
    Rng rng(46);
    const SynthRecord record = synth_record(config, Label::normal, rng);
    const PreprocessResult pre = preprocess(record.samples, config.sample_rate);
    const StateSequence decoded = segment(pre.samples, pre.sample_rate);

    const auto runs = state_runs(decoded);
    SegmentationConfig seg;
    // Interior runs only; the first and last may be partial.
    for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
        const auto [state, length] = runs[i];
        if (state == 1) {
            CHECK(length >= seg.s1_mean_ms - 3.0 * seg.s1_stddev_ms);
            CHECK(length <= seg.s1_mean_ms + 3.0 * seg.s1_stddev_ms);
        } else if (state == 3) {
            CHECK(length >= seg.s2_mean_ms - 3.0 * seg.s2_stddev_ms);
            CHECK(length <= seg.s2_mean_ms + 3.0 * seg.s2_stddev_ms);
        }
    }
}

TEST_CASE("decode of random signals keeps the cyclic order") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        Rng rng(seed);
        std::vector<double> x(3000);
        for (double& v : x) {
            v = rng.normal(0.0, 0.1);
        }
        const StateSequence decoded = segment(x, 1000.0);
        CHECK_NOTHROW(validate_state_sequence(decoded));
    }
}

TEST_CASE("decode is deterministic") {
    SynthConfig config;
    config.duration_s = 4.0;
    Rng rng(47);
    const SynthRecord record = synth_record(config, Label::abnormal, rng);
    const PreprocessResult pre = preprocess(record.samples, config.sample_rate);
    const StateSequence a = segment(pre.samples, pre.sample_rate);
    const StateSequence b = segment(pre.samples, pre.sample_rate);
    CHECK(a.labels == b.labels);
}

TEST_CASE("short signals are rejected") {
    std::vector<double> x(1500, 0.1);
    CHECK_THROWS_AS(segment(x, 1000.0), std::runtime_error);
}

TEST_CASE("external files load when consistent") {
    oracles::TempDir dir("seg");
    const auto path = dir.path() / "r.states";
    std::ofstream(path) << "1 1 2 2 3 3 4 4\n";
    const StateSequence states = load_external_segmentation(path, 8);
    CHECK(states.source == StateSource::external);
    CHECK(states.labels ==
          std::vector<std::uint8_t>{1, 1, 2, 2, 3, 3, 4, 4});
}

TEST_CASE("external files are validated") {
    oracles::TempDir dir("seg");

    const auto bad_label = dir.path() / "bad_label.states";
    std::ofstream(bad_label) << "1 2 5 4\n";
    CHECK_THROWS_AS(load_external_segmentation(bad_label, 4), std::runtime_error);

    const auto bad_order = dir.path() / "bad_order.states";
    std::ofstream(bad_order) << "1 1 3 4\n";
    CHECK_THROWS_WITH_AS(load_external_segmentation(bad_order, 4),
                         doctest::Contains("index 2"), std::runtime_error);

    const auto bad_length = dir.path() / "bad_length.states";
    std::ofstream(bad_length) << "1 2 3\n";
    CHECK_THROWS_AS(load_external_segmentation(bad_length, 4), std::runtime_error);

    CHECK_THROWS_AS(load_external_segmentation(dir.path() / "missing.states", 4),
                    std::runtime_error);
}

TEST_CASE("wraparound transitions 4 to 1 are legal, others are not") {
    StateSequence ok;
    ok.labels = {3, 3, 4, 4, 1, 1, 2};
    CHECK_NOTHROW(validate_state_sequence(ok));

    StateSequence bad;
    bad.labels = {1, 2, 3, 4, 2};
    CHECK_THROWS_WITH_AS(validate_state_sequence(bad), doctest::Contains("index 4"),
                         std::runtime_error);
}
