#pragma once

#include <span>
#include <vector>

namespace pcgkit {

enum class FilterKind { lowpass, bandpass };

struct FilterSpec {
    FilterKind kind = FilterKind::bandpass;
    double low_cut_hz = 25.0;
    double high_cut_hz = 400.0;
    // Odd tap counts keep the group delay at an integer number of samples.
    std::size_t tap_count = 201;
};

// Linear-phase FIR designed by the windowed-sinc method (Hamming window).
// Lowpass filters use high_cut_hz as the cutoff and are normalized to unit
// DC gain.
struct FirFilter {
    std::vector<double> taps;
};

FirFilter design_fir(const FilterSpec& spec, double sample_rate);

// Convolves and shifts left by (tap_count-1)/2 so output stays aligned with
// the input timeline; the tail is zero-padded back to the input length.
std::vector<double> apply_fir(std::span<const double> x, const FirFilter& filter);

std::vector<double> bandpass(std::span<const double> samples, double sample_rate,
                             const FilterSpec& spec);

struct PreprocessConfig {
    double band_low_hz = 25.0;
    double band_high_hz = 400.0;
    std::size_t band_taps = 201;
    double antialias_cutoff_hz = 450.0;
    std::size_t antialias_taps = 101;
    double target_rate_hz = 1000.0;
};

struct PreprocessResult {
    std::vector<double> samples;
    double sample_rate = 0.0;
};

// Anti-alias lowpass then decimation by two. Only inputs at exactly twice the
// target rate are accepted; output length is ceil(n/2).
PreprocessResult resample_half(std::span<const double> samples, double sample_rate,
                               const PreprocessConfig& config = {});

// Resamples when the input is at twice the target rate, then band-pass
// filters. Inputs already at the target rate skip the resampling stage; any
// other rate is rejected.
PreprocessResult preprocess(std::span<const double> samples, double sample_rate,
                            const PreprocessConfig& config = {});

} // namespace pcgkit
