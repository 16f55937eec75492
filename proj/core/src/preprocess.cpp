#include "pcgkit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pcgkit {

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) {
        return 1.0;
    }
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

double hamming(std::size_t n, std::size_t length) {
    if (length == 1) {
        return 1.0;
    }
    return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                  static_cast<double>(length - 1));
}

} // namespace

FirFilter design_fir(const FilterSpec& spec, double sample_rate) {
    if (spec.tap_count == 0 || spec.tap_count % 2 == 0) {
        throw std::invalid_argument("FIR tap count must be odd, got " +
                                    std::to_string(spec.tap_count));
    }
    const double nyquist = sample_rate / 2.0;
    const double mid = static_cast<double>(spec.tap_count - 1) / 2.0;
    FirFilter filter;
    filter.taps.resize(spec.tap_count);

    if (spec.kind == FilterKind::lowpass) {
        if (spec.high_cut_hz <= 0.0 || spec.high_cut_hz >= nyquist) {
            throw std::invalid_argument("lowpass cutoff must lie in (0, fs/2)");
        }
        const double fc = spec.high_cut_hz / sample_rate;
        double sum = 0.0;
        for (std::size_t n = 0; n < spec.tap_count; ++n) {
            const double t = static_cast<double>(n) - mid;
            const double h = 2.0 * fc * sinc(2.0 * fc * t) * hamming(n, spec.tap_count);
            filter.taps[n] = h;
            sum += h;
        }
        // Unit DC gain preserves the passband level exactly.
        for (double& tap : filter.taps) {
            tap /= sum;
        }
        return filter;
    }

    if (!(0.0 < spec.low_cut_hz && spec.low_cut_hz < spec.high_cut_hz &&
          spec.high_cut_hz < nyquist)) {
        throw std::invalid_argument("bandpass edges must satisfy 0 < low < high < fs/2");
    }
    const double f1 = spec.low_cut_hz / sample_rate;
    const double f2 = spec.high_cut_hz / sample_rate;
    for (std::size_t n = 0; n < spec.tap_count; ++n) {
        const double t = static_cast<double>(n) - mid;
        const double h = (2.0 * f2 * sinc(2.0 * f2 * t) - 2.0 * f1 * sinc(2.0 * f1 * t)) *
                         hamming(n, spec.tap_count);
        filter.taps[n] = h;
    }
    return filter;
}

std::vector<double> apply_fir(std::span<const double> x, const FirFilter& filter) {
    const std::size_t taps = filter.taps.size();
    if (taps == 0) {
        throw std::invalid_argument("apply_fir: empty filter");
    }
    const std::size_t n = x.size();
    const std::size_t delay = (taps - 1) / 2;
    std::vector<double> y(n, 0.0);
    // y[i] = sum_k h[k] * x[i + delay - k]; indices outside x read as zero.
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const std::size_t center = i + delay;
        const std::size_t k_lo = center >= n ? center - n + 1 : 0;
        const std::size_t k_hi = std::min(taps - 1, center);
        for (std::size_t k = k_lo; k <= k_hi; ++k) {
            acc += filter.taps[k] * x[center - k];
        }
        y[i] = acc;
    }
    return y;
}

std::vector<double> bandpass(std::span<const double> samples, double sample_rate,
                             const FilterSpec& spec) {
    if (spec.kind != FilterKind::bandpass) {
        throw std::invalid_argument("bandpass: spec kind must be bandpass");
    }
    return apply_fir(samples, design_fir(spec, sample_rate));
}

PreprocessResult resample_half(std::span<const double> samples, double sample_rate,
                               const PreprocessConfig& config) {
    if (sample_rate != 2.0 * config.target_rate_hz) {
        throw std::invalid_argument("resample_half: unsupported rate " +
                                    std::to_string(sample_rate) + " Hz (expected " +
                                    std::to_string(2.0 * config.target_rate_hz) + ")");
    }
    FilterSpec antialias;
    antialias.kind = FilterKind::lowpass;
    antialias.high_cut_hz = config.antialias_cutoff_hz;
    antialias.tap_count = config.antialias_taps;
    const std::vector<double> filtered =
        apply_fir(samples, design_fir(antialias, sample_rate));

    PreprocessResult result;
    result.sample_rate = config.target_rate_hz;
    result.samples.reserve((filtered.size() + 1) / 2);
    for (std::size_t i = 0; i < filtered.size(); i += 2) {
        result.samples.push_back(filtered[i]);
    }
    return result;
}

PreprocessResult preprocess(std::span<const double> samples, double sample_rate,
                            const PreprocessConfig& config) {
    PreprocessResult stage;
    if (sample_rate == config.target_rate_hz) {
        stage.samples.assign(samples.begin(), samples.end());
        stage.sample_rate = sample_rate;
    } else if (sample_rate == 2.0 * config.target_rate_hz) {
        stage = resample_half(samples, sample_rate, config);
    } else {
        throw std::invalid_argument(
            "preprocess: unsupported sample rate " + std::to_string(sample_rate) +
            " Hz (expected " + std::to_string(config.target_rate_hz) + " or twice that)");
    }

    FilterSpec band;
    band.kind = FilterKind::bandpass;
    band.low_cut_hz = config.band_low_hz;
    band.high_cut_hz = config.band_high_hz;
    band.tap_count = config.band_taps;

    PreprocessResult result;
    result.samples = bandpass(stage.samples, stage.sample_rate, band);
    result.sample_rate = stage.sample_rate;
    return result;
}

} // namespace pcgkit
