#include "pcgkit/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace pcgkit {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

[[noreturn]] void decode_error(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("wav decode error (" + path.string() + "): " + what);
}

} // namespace

WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        decode_error(path, "cannot open file");
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
        decode_error(path, "not a RIFF/WAVE file");
    }

    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
    bool have_fmt = false;
    const unsigned char* pcm = nullptr;
    std::uint32_t pcm_bytes = 0;

    std::size_t pos = 12;
    while (pos + 8 <= size) {
        const char* id = bytes.data() + pos;
        const std::uint32_t chunk_size = read_u32(data + pos + 4);
        pos += 8;
        if (pos + chunk_size > size) {
            decode_error(path, "truncated chunk '" + std::string(id, 4) + "'");
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_size < 16) {
                decode_error(path, "fmt chunk too small");
            }
            format = read_u16(data + pos);
            channels = read_u16(data + pos + 2);
            sample_rate = read_u32(data + pos + 4);
            bits = read_u16(data + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            pcm = data + pos;
            pcm_bytes = chunk_size;
        }
        pos += chunk_size + (chunk_size & 1); // chunks are word aligned
    }

    if (!have_fmt || pcm == nullptr) {
        decode_error(path, "missing fmt or data chunk");
    }
    if (format != 1) {
        decode_error(path, "unsupported encoding (only PCM format 1)");
    }
    if (channels != 1) {
        decode_error(path, "unsupported channel count " + std::to_string(channels) + " (mono only)");
    }
    if (bits != 8 && bits != 16) {
        decode_error(path, "unsupported bit depth " + std::to_string(bits));
    }
    if (sample_rate == 0) {
        decode_error(path, "zero sample rate");
    }

    WavData wav;
    wav.sample_rate = static_cast<double>(sample_rate);
    if (bits == 16) {
        if (pcm_bytes % 2 != 0) {
            decode_error(path, "odd PCM byte count for 16-bit data");
        }
        const std::size_t n = pcm_bytes / 2;
        wav.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::int16_t v =
                static_cast<std::int16_t>(pcm[2 * i] | (pcm[2 * i + 1] << 8));
            wav.samples[i] = static_cast<double>(v) / 32768.0;
        }
    } else {
        wav.samples.resize(pcm_bytes);
        for (std::size_t i = 0; i < pcm_bytes; ++i) {
            wav.samples[i] = (static_cast<double>(pcm[i]) - 128.0) / 128.0;
        }
    }
    return wav;
}

void write_wav_pcm16(const std::filesystem::path& path,
                     std::span<const double> samples, double sample_rate) {
    if (sample_rate <= 0.0) {
        throw std::invalid_argument("write_wav_pcm16: sample rate must be positive");
    }
    const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(sample_rate));
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);

    std::string out;
    out.reserve(44 + data_bytes);
    out.append("RIFF");
    put_u32(out, 36 + data_bytes);
    out.append("WAVE");
    out.append("fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, rate);
    put_u32(out, rate * 2); // byte rate
    put_u16(out, 2);  // block align
    put_u16(out, 16); // bits
    out.append("data");
    put_u32(out, data_bytes);
    for (double s : samples) {
        const double clamped = std::clamp(s, -1.0, 1.0);
        const auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(v));
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) {
        throw std::runtime_error("short write: " + path.string());
    }
}

} // namespace pcgkit
