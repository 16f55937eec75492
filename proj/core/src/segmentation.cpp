#include "pcgkit/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pcgkit/preprocess.hpp"

namespace pcgkit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double gaussian_log_density(double x, double mean, double stddev) {
    const double z = (x - mean) / stddev;
    return -0.5 * z * z - std::log(stddev * std::sqrt(2.0 * std::numbers::pi));
}

// Predecessor in the 1->2->3->4->1 cycle, states stored 0-based.
std::size_t prev_state(std::size_t s) {
    return (s + 3) % 4;
}

struct DurationPrior {
    double mean = 0.0;
    double stddev = 1.0;
    std::size_t d_min = 1;
    std::size_t d_max = 1;

    double log_density(std::size_t d) const {
        const double clamped = std::clamp(static_cast<double>(d),
                                          static_cast<double>(d_min),
                                          static_cast<double>(d_max));
        return gaussian_log_density(clamped, mean, stddev);
    }
};

DurationPrior make_prior(double mean_samples, double stddev_samples) {
    DurationPrior prior;
    prior.mean = mean_samples;
    prior.stddev = stddev_samples;
    const double lo = mean_samples - 3.0 * stddev_samples;
    const double hi = mean_samples + 3.0 * stddev_samples;
    prior.d_min = static_cast<std::size_t>(std::max(1.0, std::round(lo)));
    prior.d_max = static_cast<std::size_t>(std::max(1.0, std::round(hi)));
    return prior;
}

} // namespace

Envelope compute_envelope(std::span<const double> samples, double sample_rate,
                          const SegmentationConfig& config) {
    if (samples.empty()) {
        throw std::invalid_argument("compute_envelope: empty signal");
    }
    Envelope env;
    env.sample_rate = sample_rate;

    double peak = 0.0;
    for (double s : samples) {
        peak = std::max(peak, std::abs(s));
    }
    if (peak == 0.0) {
        env.values.assign(samples.size(), 0.0);
        env.flat = true;
        return env;
    }

    const double eps = 1e-6 * peak;
    std::vector<double> log_mag(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        log_mag[i] = std::log(std::abs(samples[i]) + eps);
    }

    FilterSpec spec;
    spec.kind = FilterKind::lowpass;
    spec.high_cut_hz = config.envelope_cutoff_hz;
    // Keep the smoothing window narrower than the shortest heart sound
    // (about 90 ms); longer windows average the log of a short burst with the
    // surrounding noise floor and flatten it away.
    spec.tap_count = 41;
    std::vector<double> smoothed = apply_fir(log_mag, design_fir(spec, sample_rate));

    env.values.resize(smoothed.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < smoothed.size(); ++i) {
        env.values[i] = std::exp(smoothed[i]);
        lo = std::min(lo, env.values[i]);
        hi = std::max(hi, env.values[i]);
    }
    if (hi - lo < 1e-300) {
        std::fill(env.values.begin(), env.values.end(), 0.0);
        env.flat = true;
        return env;
    }
    for (double& v : env.values) {
        v = (v - lo) / (hi - lo);
    }
    return env;
}

HeartRateEstimate estimate_heart_rate(const Envelope& env,
                                      const SegmentationConfig& config) {
    HeartRateEstimate fallback;
    fallback.low_confidence = true;

    const std::size_t n = env.values.size();
    if (env.flat || n < 3) {
        return fallback;
    }

    double mean = 0.0;
    for (double v : env.values) {
        mean += v;
    }
    mean /= static_cast<double>(n);

    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) {
        centered[i] = env.values[i] - mean;
    }

    const auto min_lag =
        static_cast<std::size_t>(std::round(config.min_lag_s * env.sample_rate));
    const std::size_t max_lag = std::min(
        static_cast<std::size_t>(std::round(config.max_lag_s * env.sample_rate)),
        n >= 2 ? n - 2 : 0);
    if (min_lag + 1 > max_lag || min_lag < 1) {
        return fallback;
    }

    std::vector<double> autocorr(max_lag + 2, 0.0);
    for (std::size_t lag = 0; lag <= max_lag + 1; ++lag) {
        double acc = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            acc += centered[t] * centered[t + lag];
        }
        autocorr[lag] = acc;
    }

    std::size_t beat_lag = 0;
    double beat_peak = 0.0;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
        if (autocorr[lag] > 0.0 && autocorr[lag] >= autocorr[lag - 1] &&
            autocorr[lag] >= autocorr[lag + 1] && autocorr[lag] > beat_peak) {
            beat_peak = autocorr[lag];
            beat_lag = lag;
        }
    }
    if (beat_lag == 0) {
        return fallback;
    }

    HeartRateEstimate estimate;
    estimate.beats_per_minute =
        std::clamp(60.0 * env.sample_rate / static_cast<double>(beat_lag), 30.0, 200.0);

    // The S1-S2 spacing shows up as the first secondary autocorrelation peak
    // inside the beat period.
    const auto sys_lo = static_cast<std::size_t>(
        std::max(2.0, std::round(0.15 * static_cast<double>(beat_lag))));
    const std::size_t sys_hi = beat_lag / 2;
    double fraction = 0.35;
    for (std::size_t lag = sys_lo; lag <= sys_hi; ++lag) {
        if (autocorr[lag] >= 0.25 * beat_peak && autocorr[lag] >= autocorr[lag - 1] &&
            autocorr[lag] >= autocorr[lag + 1]) {
            fraction = static_cast<double>(lag) / static_cast<double>(beat_lag);
            break;
        }
    }
    estimate.systole_fraction = std::clamp(fraction, 0.2, 0.6);
    return estimate;
}

StateSequence segment(std::span<const double> samples, double sample_rate,
                      const SegmentationConfig& config) {
    const std::size_t t_count = samples.size();
    if (static_cast<double>(t_count) < 2.0 * sample_rate) {
        throw std::runtime_error("segment: need at least 2 seconds of signal");
    }

    const Envelope env = compute_envelope(samples, sample_rate, config);
    const HeartRateEstimate rate = estimate_heart_rate(env, config);

    const double ms = sample_rate / 1000.0;
    const double period = 60.0 * sample_rate / rate.beats_per_minute;
    const double mu_s1 = config.s1_mean_ms * ms;
    const double mu_s2 = config.s2_mean_ms * ms;
    const double mu_sys =
        std::max(30.0 * ms, rate.systole_fraction * period - mu_s1);
    const double mu_dia =
        std::max(50.0 * ms, (1.0 - rate.systole_fraction) * period - mu_s2);

    DurationPrior priors[4] = {
        make_prior(mu_s1, config.s1_stddev_ms * ms),
        make_prior(mu_sys, std::max(15.0 * ms, 0.2 * mu_sys)),
        make_prior(mu_s2, config.s2_stddev_ms * ms),
        make_prior(mu_dia, std::max(20.0 * ms, 0.2 * mu_dia)),
    };
    for (DurationPrior& prior : priors) {
        prior.d_max = std::min(prior.d_max, t_count);
    }

    // Per-state prefix sums of emission log-densities give O(1) segment scores.
    const double state_means[4] = {config.emission_high_mean, config.emission_low_mean,
                                   config.emission_high_mean, config.emission_low_mean};
    std::vector<std::vector<double>> emission_prefix(
        4, std::vector<double>(t_count + 1, 0.0));
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t t = 0; t < t_count; ++t) {
            emission_prefix[s][t + 1] =
                emission_prefix[s][t] +
                gaussian_log_density(env.values[t], state_means[s],
                                     config.emission_stddev);
        }
    }
    auto emission_sum = [&](std::size_t s, std::size_t begin, std::size_t end) {
        return emission_prefix[s][end] - emission_prefix[s][begin];
    };

    // score[t][s]: best log-score of any labeling of samples [0, t] whose last
    // segment has state s and ends exactly at t. chosen[t][s] holds that
    // segment's duration.
    std::vector<std::array<double, 4>> score(
        t_count, {kNegInf, kNegInf, kNegInf, kNegInf});
    std::vector<std::array<std::uint32_t, 4>> chosen(t_count, {0, 0, 0, 0});

    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t s = 0; s < 4; ++s) {
            const DurationPrior& prior = priors[s];
            double best = kNegInf;
            std::uint32_t best_d = 0;

            // Opening segment: the record may begin mid-state, so durations
            // below d_min are allowed with the prior clamped.
            if (t + 1 <= prior.d_max) {
                const std::size_t d = t + 1;
                const double cand = prior.log_density(d) + emission_sum(s, 0, t + 1);
                if (cand > best) {
                    best = cand;
                    best_d = static_cast<std::uint32_t>(d);
                }
            }

            const std::size_t p = prev_state(s);
            const std::size_t d_hi = std::min(static_cast<std::size_t>(t), prior.d_max);
            for (std::size_t d = prior.d_min; d <= d_hi; ++d) {
                const std::size_t start = t + 1 - d;
                const double base = score[start - 1][p];
                if (base == kNegInf) {
                    continue;
                }
                const double cand =
                    base + prior.log_density(d) + emission_sum(s, start, t + 1);
                if (cand > best) {
                    best = cand;
                    best_d = static_cast<std::uint32_t>(d);
                }
            }
            score[t][s] = best;
            chosen[t][s] = best_d;
        }
    }

    // Closing segment may also be cut short, so redo the last step with the
    // minimum-duration constraint relaxed.
    double best_final = kNegInf;
    std::size_t final_state = 0;
    std::uint32_t final_d = 0;
    for (std::size_t s = 0; s < 4; ++s) {
        const DurationPrior& prior = priors[s];
        const std::size_t p = prev_state(s);
        const std::size_t d_hi = std::min(t_count, prior.d_max);
        for (std::size_t d = 1; d <= d_hi; ++d) {
            const std::size_t start = t_count - d;
            double cand = prior.log_density(d) + emission_sum(s, start, t_count);
            if (start == 0) {
                // Single-segment labeling of the whole record.
            } else {
                const double base = score[start - 1][p];
                if (base == kNegInf) {
                    continue;
                }
                cand += base;
            }
            if (cand > best_final) {
                best_final = cand;
                final_state = s;
                final_d = static_cast<std::uint32_t>(d);
            }
        }
    }
    if (best_final == kNegInf) {
        throw std::runtime_error("segment: no feasible state path");
    }

    StateSequence states;
    states.labels.assign(t_count, 0);
    states.source = StateSource::internal;

    std::size_t seg_state = final_state;
    std::size_t seg_end = t_count;
    std::size_t seg_len = final_d;
    while (true) {
        const std::size_t seg_begin = seg_end - seg_len;
        std::fill(states.labels.begin() + static_cast<std::ptrdiff_t>(seg_begin),
                  states.labels.begin() + static_cast<std::ptrdiff_t>(seg_end),
                  static_cast<std::uint8_t>(seg_state + 1));
        if (seg_begin == 0) {
            break;
        }
        seg_state = prev_state(seg_state);
        seg_end = seg_begin;
        seg_len = chosen[seg_end - 1][seg_state];
        if (seg_len == 0 || seg_len > seg_end) {
            throw std::logic_error("segment: corrupt backtrack state");
        }
    }
    return states;
}

void validate_state_sequence(const StateSequence& states) {
    const auto& labels = states.labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 1 || labels[i] > 4) {
            throw std::runtime_error("state sequence: label " +
                                     std::to_string(static_cast<int>(labels[i])) +
                                     " out of range at index " + std::to_string(i));
        }
        if (i > 0 && labels[i] != labels[i - 1]) {
            const std::uint8_t expected =
                static_cast<std::uint8_t>(labels[i - 1] % 4 + 1);
            if (labels[i] != expected) {
                throw std::runtime_error(
                    "state sequence: transition " + std::to_string(labels[i - 1]) +
                    "->" + std::to_string(labels[i]) +
                    " breaks cyclic order at index " + std::to_string(i));
            }
        }
    }
}

StateSequence load_external_segmentation(const std::filesystem::path& path,
                                         std::size_t expected_length) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open segmentation file: " + path.string());
    }
    StateSequence states;
    states.source = StateSource::external;
    states.labels.reserve(expected_length);
    long long value = 0;
    while (in >> value) {
        if (value < 1 || value > 4) {
            throw std::runtime_error("segmentation file " + path.string() + ": label " +
                                     std::to_string(value) + " out of range at index " +
                                     std::to_string(states.labels.size()));
        }
        states.labels.push_back(static_cast<std::uint8_t>(value));
    }
    if (!in.eof()) {
        throw std::runtime_error("segmentation file " + path.string() +
                                 ": non-integer token at index " +
                                 std::to_string(states.labels.size()));
    }
    if (states.labels.size() != expected_length) {
        throw std::runtime_error(
            "segmentation file " + path.string() + ": expected " +
            std::to_string(expected_length) + " labels, found " +
            std::to_string(states.labels.size()));
    }
    validate_state_sequence(states);
    return states;
}

} // namespace pcgkit
