#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcgkit/label.hpp"
#include "pcgkit/rng.hpp"
#include "pcgkit/segmentation.hpp"

namespace pcgkit {

// Synthetic PCG model: fixed-period beats of flat-topped S1/S2 tone bursts
// (short cosine ramps at the edges) over a low noise floor. Abnormal records
// add a band-limited systolic murmur. 12 s at 75 bpm gives exactly 15 beats.
struct SynthConfig {
    double sample_rate = 2000.0;
    double states_rate = 1000.0;
    double duration_s = 12.0;
    double bpm = 75.0;
    double systole_fraction = 0.35;
    double s1_ms = 122.0;
    double s2_ms = 92.0;
    double s1_freq_hz = 60.0;
    double s2_freq_hz = 90.0;
    double s1_amp = 0.7;
    double s2_amp = 0.5;
    double noise_stddev = 0.015;
    double murmur_amp = 0.25;
    double murmur_low_hz = 150.0;
    double murmur_high_hz = 350.0;
};

struct SynthRecord {
    std::vector<double> samples;
    // Ground-truth labels at states_rate, aligned with the record after
    // resampling.
    StateSequence truth;
    Label label = Label::normal;
};

SynthRecord synth_record(const SynthConfig& config, Label label, Rng& rng);

// Writes one subset directory holding <id>.wav, <id>.states (ground truth),
// and REFERENCE.csv. Record ids: sa#### abnormal, sn#### normal. Content is
// deterministic in (seed, counts, config).
void write_synth_dataset(const std::filesystem::path& dir, std::size_t normal_count,
                         std::size_t abnormal_count, std::uint64_t seed,
                         const SynthConfig& config = {});

} // namespace pcgkit
