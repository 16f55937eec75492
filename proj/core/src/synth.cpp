#include "pcgkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pcgkit/wav.hpp"

namespace pcgkit {

namespace {

// Raised-cosine envelope over [0, 1], zero at both ends.
double hann(double t01) {
    if (t01 <= 0.0 || t01 >= 1.0) {
        return 0.0;
    }
    return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t01));
}

// Flat-top (Tukey) envelope over [0, 1] with short raised-cosine ramps, so a
// heart sound fills its labeled interval instead of fading across it.
double burst_envelope(double t01) {
    constexpr double ramp = 0.075;
    if (t01 <= 0.0 || t01 >= 1.0) {
        return 0.0;
    }
    if (t01 < ramp) {
        return 0.5 * (1.0 - std::cos(std::numbers::pi * t01 / ramp));
    }
    if (t01 > 1.0 - ramp) {
        return 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - t01) / ramp));
    }
    return 1.0;
}

struct BeatTimings {
    double period_s;
    double s1_end_s;
    double sys_end_s;
    double s2_end_s;
};

BeatTimings timings(const SynthConfig& config) {
    BeatTimings t;
    t.period_s = 60.0 / config.bpm;
    t.s1_end_s = config.s1_ms / 1000.0;
    t.sys_end_s = config.systole_fraction * t.period_s;
    t.s2_end_s = t.sys_end_s + config.s2_ms / 1000.0;
    if (!(t.s1_end_s < t.sys_end_s && t.s2_end_s < t.period_s)) {
        throw std::invalid_argument("synth: beat timings do not fit the period");
    }
    return t;
}

std::uint8_t state_at(double in_period_s, const BeatTimings& t) {
    if (in_period_s < t.s1_end_s) return 1;
    if (in_period_s < t.sys_end_s) return 2;
    if (in_period_s < t.s2_end_s) return 3;
    return 4;
}

// Band-limited murmur: random-phase sinusoids every 20 Hz across the band.
struct Murmur {
    std::vector<double> freqs;
    std::vector<double> phases;
    std::vector<double> amps;

    double sample(double t_s) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            acc += amps[i] *
                   std::sin(2.0 * std::numbers::pi * freqs[i] * t_s + phases[i]);
        }
        return acc;
    }
};

Murmur make_murmur(const SynthConfig& config, Rng& rng) {
    Murmur murmur;
    for (double f = config.murmur_low_hz; f <= config.murmur_high_hz; f += 20.0) {
        murmur.freqs.push_back(f);
        murmur.phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
        murmur.amps.push_back(rng.uniform(0.5, 1.0));
    }
    double norm = 0.0;
    for (double a : murmur.amps) {
        norm += a * a;
    }
    // Scale so the murmur's RMS equals murmur_amp / sqrt(2).
    const double scale = config.murmur_amp / std::sqrt(norm);
    for (double& a : murmur.amps) {
        a *= scale;
    }
    return murmur;
}

} // namespace

SynthRecord synth_record(const SynthConfig& config, Label label, Rng& rng) {
    if (label == Label::uncertain) {
        throw std::invalid_argument("synth_record: label must be normal or abnormal");
    }
    const BeatTimings t = timings(config);
    const auto n = static_cast<std::size_t>(
        std::llround(config.duration_s * config.sample_rate));

    // Per-record variability: burst level and tone phase drift between
    // records, and beat-to-beat level jitter within a record. Timing stays
    // fixed so the ground-truth states are exact.
    const double s1_level = config.s1_amp * rng.uniform(0.9, 1.1);
    const double s2_level = config.s2_amp * rng.uniform(0.9, 1.1);
    const double s1_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double s2_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Murmur murmur =
        label == Label::abnormal ? make_murmur(config, rng) : Murmur{};

    const auto beat_count = static_cast<std::size_t>(
        std::ceil(config.duration_s / t.period_s));
    std::vector<double> beat_gain(beat_count);
    for (double& g : beat_gain) {
        g = rng.uniform(0.95, 1.05);
    }

    SynthRecord record;
    record.label = label;
    record.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t_s = static_cast<double>(i) / config.sample_rate;
        const auto beat = static_cast<std::size_t>(t_s / t.period_s);
        const double in_period = t_s - static_cast<double>(beat) * t.period_s;
        const double gain = beat_gain[std::min(beat, beat_count - 1)];

        double value = rng.normal(0.0, config.noise_stddev);
        if (in_period < t.s1_end_s) {
            value += gain * s1_level * burst_envelope(in_period / t.s1_end_s) *
                     std::sin(2.0 * std::numbers::pi * config.s1_freq_hz * t_s + s1_phase);
        } else if (in_period < t.sys_end_s && label == Label::abnormal) {
            const double u = (in_period - t.s1_end_s) / (t.sys_end_s - t.s1_end_s);
            value += gain * hann(u) * murmur.sample(t_s);
        } else if (in_period >= t.sys_end_s && in_period < t.s2_end_s) {
            const double u = (in_period - t.sys_end_s) / (t.s2_end_s - t.sys_end_s);
            value += gain * s2_level * burst_envelope(u) *
                     std::sin(2.0 * std::numbers::pi * config.s2_freq_hz * t_s + s2_phase);
        }
        record.samples[i] = value;
    }

    const auto states_len = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * config.states_rate / config.sample_rate));
    record.truth.source = StateSource::external;
    record.truth.labels.resize(states_len);
    for (std::size_t i = 0; i < states_len; ++i) {
        const double t_s = static_cast<double>(i) / config.states_rate;
        const double in_period = std::fmod(t_s, t.period_s);
        record.truth.labels[i] = state_at(in_period, t);
    }
    return record;
}

void write_synth_dataset(const std::filesystem::path& dir, std::size_t normal_count,
                         std::size_t abnormal_count, std::uint64_t seed,
                         const SynthConfig& config) {
    std::filesystem::create_directories(dir);
    std::ofstream reference(dir / "REFERENCE.csv", std::ios::trunc);
    if (!reference) {
        throw std::runtime_error("cannot write REFERENCE.csv under " + dir.string());
    }

    const auto write_one = [&](const std::string& id, Label label,
                               std::uint64_t stream) {
        Rng rng(derive_seed(seed, stream));
        const SynthRecord record = synth_record(config, label, rng);
        write_wav_pcm16(dir / (id + ".wav"), record.samples, config.sample_rate);

        std::ofstream states(dir / (id + ".states"), std::ios::trunc);
        if (!states) {
            throw std::runtime_error("cannot write states file for " + id);
        }
        for (std::size_t i = 0; i < record.truth.labels.size(); ++i) {
            states << static_cast<int>(record.truth.labels[i])
                   << (i + 1 == record.truth.labels.size() ? '\n' : ' ');
        }
        reference << id << ',' << label_to_challenge(label) << '\n';
    };

    char id_buffer[32];
    for (std::size_t i = 0; i < abnormal_count; ++i) {
        std::snprintf(id_buffer, sizeof(id_buffer), "sa%04zu", i + 1);
        write_one(id_buffer, Label::abnormal, i);
    }
    for (std::size_t i = 0; i < normal_count; ++i) {
        std::snprintf(id_buffer, sizeof(id_buffer), "sn%04zu", i + 1);
        write_one(id_buffer, Label::normal, abnormal_count + i);
    }
    if (!reference) {
        throw std::runtime_error("short write to REFERENCE.csv under " + dir.string());
    }
}

} // namespace pcgkit
