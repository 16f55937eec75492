#include "pcgkit/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pcgkit {

namespace {

bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

// In-place iterative radix-2 Cooley-Tukey.
void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

} // namespace

double hz_to_mel(double hz) {
    if (hz < 0.0) {
        throw std::domain_error("hz_to_mel: negative frequency");
    }
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
    if (mel < 0.0) {
        throw std::domain_error("mel_to_hz: negative mel value");
    }
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterBank build_filterbank(double f_min_hz, double f_max_hz,
                               std::size_t filter_count, std::size_t dft_size,
                               double sample_rate) {
    if (filter_count < 1) {
        throw std::invalid_argument("build_filterbank: need at least one filter");
    }
    if (!is_power_of_two(dft_size)) {
        throw std::invalid_argument("build_filterbank: DFT size must be a power of two");
    }
    if (f_max_hz > sample_rate / 2.0) {
        throw std::invalid_argument("build_filterbank: f_max above Nyquist");
    }
    if (f_min_hz < 0.0 || f_min_hz >= f_max_hz) {
        throw std::invalid_argument("build_filterbank: need 0 <= f_min < f_max");
    }

    const std::size_t points = filter_count + 2;
    const double mel_lo = hz_to_mel(f_min_hz);
    const double mel_hi = hz_to_mel(f_max_hz);

    MelFilterBank bank;
    bank.dft_size = dft_size;
    bank.bin_points.resize(points);
    for (std::size_t j = 0; j < points; ++j) {
        const double mel =
            mel_lo + (mel_hi - mel_lo) * static_cast<double>(j) /
                         static_cast<double>(points - 1);
        const double hz = mel_to_hz(mel);
        bank.bin_points[j] = static_cast<std::size_t>(
            std::ceil(hz * static_cast<double>(dft_size) / sample_rate));
    }

    const std::size_t bins = dft_size / 2 + 1;
    bank.weights.assign(filter_count, std::vector<double>(bins, 0.0));
    for (std::size_t m = 0; m < filter_count; ++m) {
        const std::size_t lo = bank.bin_points[m];
        const std::size_t mid = bank.bin_points[m + 1];
        const std::size_t hi = bank.bin_points[m + 2];
        auto& w = bank.weights[m];
        if (lo == hi) {
            // Ceiling collision collapsed the triangle; keep a unit spike so
            // the band still observes its bin.
            w[mid] = 1.0;
            bank.has_degenerate = true;
            continue;
        }
        for (std::size_t k = lo; k <= hi && k < bins; ++k) {
            if (k < mid) {
                w[k] = static_cast<double>(k - lo) / static_cast<double>(mid - lo);
            } else if (k == mid) {
                w[k] = 1.0;
            } else {
                w[k] = static_cast<double>(hi - k) / static_cast<double>(hi - mid);
            }
        }
    }
    return bank;
}

WindowedFrames frame_signal(std::span<const double> samples, double sample_rate,
                            const FrameSpec& spec) {
    const auto frame_len = static_cast<std::size_t>(
        std::lround(spec.frame_ms * sample_rate / 1000.0));
    const auto hop = static_cast<std::size_t>(
        std::lround(spec.hop_ms * sample_rate / 1000.0));
    if (frame_len == 0 || hop == 0) {
        throw std::invalid_argument("frame_signal: frame and hop must be nonzero");
    }
    if (frame_len > spec.dft_size) {
        throw std::invalid_argument("frame_signal: frame longer than DFT size");
    }
    if (samples.size() < frame_len) {
        throw std::invalid_argument("frame_signal: signal shorter than one frame");
    }

    std::vector<double> window(frame_len);
    for (std::size_t n = 0; n < frame_len; ++n) {
        window[n] = frame_len == 1
                        ? 1.0
                        : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                                 static_cast<double>(n) /
                                                 static_cast<double>(frame_len - 1));
    }

    WindowedFrames out;
    const std::size_t count = (samples.size() - frame_len) / hop + 1;
    out.frames.reserve(count);
    out.centers.reserve(count);
    for (std::size_t f = 0; f < count; ++f) {
        const std::size_t start = f * hop;
        std::vector<double> frame(spec.dft_size, 0.0);
        for (std::size_t n = 0; n < frame_len; ++n) {
            frame[n] = samples[start + n] * window[n];
        }
        out.frames.push_back(std::move(frame));
        out.centers.push_back(start + frame_len / 2);
    }
    return out;
}

std::vector<double> frame_power_spectrum(std::span<const double> frame) {
    const std::size_t n = frame.size();
    if (!is_power_of_two(n)) {
        throw std::invalid_argument("frame_power_spectrum: length must be a power of two");
    }
    std::vector<std::complex<double>> spectrum(frame.begin(), frame.end());
    fft(spectrum);
    std::vector<double> power(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        power[k] = std::norm(spectrum[k]) / static_cast<double>(n);
    }
    return power;
}

std::vector<double> band_powers(std::span<const double> power,
                                const MelFilterBank& bank) {
    const std::size_t bins = bank.dft_size / 2 + 1;
    if (power.size() != bins) {
        throw std::invalid_argument("band_powers: expected " + std::to_string(bins) +
                                    " bins, got " + std::to_string(power.size()));
    }
    constexpr double kFloor = 1e-12;
    std::vector<double> bands(bank.weights.size());
    for (std::size_t m = 0; m < bank.weights.size(); ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            acc += power[k] * bank.weights[m][k];
        }
        bands[m] = 10.0 * std::log10(std::max(acc, kFloor));
    }
    return bands;
}

std::vector<double> dct_ii(std::span<const double> values) {
    const std::size_t m_count = values.size();
    std::vector<double> out(m_count, 0.0);
    for (std::size_t k = 0; k < m_count; ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            acc += values[m] * std::cos(std::numbers::pi / static_cast<double>(m_count) *
                                        (static_cast<double>(m) + 0.5) *
                                        static_cast<double>(k));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<FrameMfcc> compute_frame_mfccs(std::span<const double> samples,
                                           double sample_rate,
                                           const MfccConfig& config) {
    const MelFilterBank bank =
        build_filterbank(config.f_min_hz, config.f_max_hz, config.filter_count,
                         config.frame.dft_size, sample_rate);
    const WindowedFrames framed = frame_signal(samples, sample_rate, config.frame);

    std::vector<FrameMfcc> out;
    out.reserve(framed.frames.size());
    for (std::size_t f = 0; f < framed.frames.size(); ++f) {
        const std::vector<double> power = frame_power_spectrum(framed.frames[f]);
        const std::vector<double> bands = band_powers(power, bank);
        std::vector<double> coeffs = dct_ii(bands);
        coeffs.resize(config.keep_coefficients);
        FrameMfcc frame;
        frame.coefficients = std::move(coeffs);
        frame.frame_index = f;
        frame.center_sample = framed.centers[f];
        out.push_back(std::move(frame));
    }
    return out;
}

namespace {

// Mean coefficient vector over frames whose center lies in [begin, end); if
// none, fall back to the frame nearest the interval midpoint.
std::vector<double> segment_mean(const std::vector<FrameMfcc>& frames,
                                 const Interval& segment, std::size_t dim,
                                 bool& used_nearest) {
    std::vector<double> mean(dim, 0.0);
    std::size_t count = 0;
    for (const FrameMfcc& frame : frames) {
        if (frame.center_sample >= segment.begin && frame.center_sample < segment.end) {
            for (std::size_t i = 0; i < dim; ++i) {
                mean[i] += frame.coefficients[i];
            }
            ++count;
        }
    }
    if (count > 0) {
        for (double& v : mean) {
            v /= static_cast<double>(count);
        }
        return mean;
    }

    used_nearest = true;
    const double midpoint =
        (static_cast<double>(segment.begin) + static_cast<double>(segment.end)) / 2.0;
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const double dist =
            std::abs(static_cast<double>(frames[f].center_sample) - midpoint);
        if (dist < best_dist) {
            best_dist = dist;
            best = f;
        }
    }
    return std::vector<double>(frames[best].coefficients.begin(),
                               frames[best].coefficients.begin() +
                                   static_cast<std::ptrdiff_t>(dim));
}

} // namespace

BeatFeatures beat_features(const std::vector<FrameMfcc>& frames, const Beat& beat,
                           std::size_t keep_coefficients) {
    if (frames.empty()) {
        throw std::invalid_argument("beat_features: no frames");
    }
    const Interval* segments[4] = {&beat.s1, &beat.systole, &beat.s2, &beat.diastole};
    for (const Interval* segment : segments) {
        if (segment->empty()) {
            throw std::invalid_argument("beat_features: empty segment in beat");
        }
    }
    BeatFeatures features;
    features.values.reserve(4 * keep_coefficients);
    for (const Interval* segment : segments) {
        const std::vector<double> mean = segment_mean(
            frames, *segment, keep_coefficients, features.used_nearest_frame);
        features.values.insert(features.values.end(), mean.begin(), mean.end());
    }
    return features;
}

} // namespace pcgkit
