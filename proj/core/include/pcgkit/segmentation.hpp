#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pcgkit {

// Per-sample labels: 1 = S1, 2 = systole, 3 = S2, 4 = diastole.
enum class StateSource { internal, external };

struct StateSequence {
    std::vector<std::uint8_t> labels;
    StateSource source = StateSource::internal;
};

struct Envelope {
    std::vector<double> values;
    double sample_rate = 0.0;
    // Set for an all-zero input, where normalization is impossible.
    bool flat = false;
};

struct HeartRateEstimate {
    double beats_per_minute = 75.0;
    double systole_fraction = 0.35;
    // Set when no usable autocorrelation peak was found and defaults apply.
    bool low_confidence = false;
};

struct SegmentationConfig {
    double envelope_cutoff_hz = 8.0;
    double s1_mean_ms = 122.0;
    double s1_stddev_ms = 30.0;
    double s2_mean_ms = 92.0;
    double s2_stddev_ms = 25.0;
    double emission_high_mean = 0.6;
    double emission_low_mean = 0.1;
    double emission_stddev = 0.25;
    double min_lag_s = 0.3;
    double max_lag_s = 2.0;
};

// Homomorphic envelope: low-pass filtered log magnitude, exponentiated and
// min-max normalized to [0, 1].
Envelope compute_envelope(std::span<const double> samples, double sample_rate,
                          const SegmentationConfig& config = {});

// Beat period from the strongest autocorrelation peak in [0.3 s, 2 s];
// systole fraction from the first prominent peak below half the beat lag.
HeartRateEstimate estimate_heart_rate(const Envelope& env,
                                      const SegmentationConfig& config = {});

// Duration-constrained Viterbi decode over the cyclic 4-state heart cycle.
StateSequence segment(std::span<const double> samples, double sample_rate,
                      const SegmentationConfig& config = {});

// Reads one integer label per sample (whitespace separated) and validates it.
StateSequence load_external_segmentation(const std::filesystem::path& path,
                                         std::size_t expected_length);

// Throws naming the first offending index when a label is out of range or the
// 1->2->3->4->1 cyclic order is broken.
void validate_state_sequence(const StateSequence& states);

} // namespace pcgkit
