#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace pcgkit {

struct WavData {
    std::vector<double> samples; // amplitudes in [-1, 1]
    double sample_rate = 0.0;
};

// Reads a mono PCM WAV file (8 or 16 bit). Amplitudes are normalized by the
// full-scale integer range. Throws std::runtime_error on unsupported
// encodings or truncated files.
WavData read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM; samples are clamped to [-1, 1].
void write_wav_pcm16(const std::filesystem::path& path,
                     std::span<const double> samples, double sample_rate);

} // namespace pcgkit
