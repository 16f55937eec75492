#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcgkit/beat.hpp"

namespace pcgkit {

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterBank {
    std::size_t dft_size = 0;
    // M+2 bin indices delimiting the triangles.
    std::vector<std::size_t> bin_points;
    // One weight row per filter, each spanning bins 0..N/2.
    std::vector<std::vector<double>> weights;
    // True when ceiling collisions collapsed some triangle to a single bin.
    bool has_degenerate = false;
};

MelFilterBank build_filterbank(double f_min_hz, double f_max_hz,
                               std::size_t filter_count, std::size_t dft_size,
                               double sample_rate);

struct FrameSpec {
    double frame_ms = 24.0;
    double hop_ms = 6.0;
    std::size_t dft_size = 64;
};

struct WindowedFrames {
    // Each frame is Hamming-windowed and zero-padded to dft_size.
    std::vector<std::vector<double>> frames;
    // Sample index of each frame's center (start + frame_len/2).
    std::vector<std::size_t> centers;
};

WindowedFrames frame_signal(std::span<const double> samples, double sample_rate,
                            const FrameSpec& spec = {});

// |X[k]|^2 / N for k = 0..N/2 using a radix-2 FFT. Frame length must be a
// power of two.
std::vector<double> frame_power_spectrum(std::span<const double> frame);

// 10*log10 of per-band weighted power sums, log argument floored at 1e-12.
std::vector<double> band_powers(std::span<const double> power,
                                const MelFilterBank& bank);

// Unscaled DCT-II: C[k] = sum_m P[m] * cos(pi/M * (m + 1/2) * k).
std::vector<double> dct_ii(std::span<const double> values);

struct MfccConfig {
    FrameSpec frame;
    double f_min_hz = 0.0;
    double f_max_hz = 400.0;
    std::size_t filter_count = 20;
    std::size_t keep_coefficients = 13;
};

struct FrameMfcc {
    std::vector<double> coefficients;
    std::size_t frame_index = 0;
    std::size_t center_sample = 0;
};

std::vector<FrameMfcc> compute_frame_mfccs(std::span<const double> samples,
                                           double sample_rate,
                                           const MfccConfig& config = {});

struct BeatFeatures {
    // [S1 c0..c12, systole c0..c12, S2 c0..c12, diastole c0..c12].
    std::vector<double> values;
    std::size_t beat_index = 0;
    // Set when some segment held no frame center and the nearest frame was
    // substituted.
    bool used_nearest_frame = false;
};

// Averages frame coefficient vectors per segment by frame-center membership.
// A segment without any frame center borrows the frame whose center is
// nearest to the segment midpoint. Throws if a segment has zero length.
BeatFeatures beat_features(const std::vector<FrameMfcc>& frames, const Beat& beat,
                           std::size_t keep_coefficients = 13);

} // namespace pcgkit
