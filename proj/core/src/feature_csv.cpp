#include "pcgkit/feature_csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pcgkit {

namespace {

constexpr std::size_t kCoefficients = 13;
constexpr const char* kSegmentNames[4] = {"s1", "sys", "s2", "dia"};

std::string expected_header() {
    std::string header = "record,beat";
    for (const char* segment : kSegmentNames) {
        for (std::size_t c = 0; c < kCoefficients; ++c) {
            header += ',';
            header += segment;
            header += "_c";
            header += std::to_string(c);
        }
    }
    header += ",label";
    return header;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& text, const std::string& where) {
    double value = 0.0;
    const auto* begin = text.data();
    const auto* end = begin + text.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end) {
        throw std::runtime_error(where + ": bad number `" + text + "`");
    }
    return value;
}

} // namespace

void write_feature_csv(const std::vector<RecordFeatures>& records,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << expected_header() << '\n';
    char buffer[64];
    for (const RecordFeatures& rf : records) {
        if (rf.beats.size() != kBeatsPerRecord) {
            throw std::invalid_argument("feature csv: record " + rf.record_id +
                                        " lacks " + std::to_string(kBeatsPerRecord) +
                                        " beats");
        }
        for (std::size_t b = 0; b < rf.beats.size(); ++b) {
            const BeatFeatures& beat = rf.beats[b];
            if (beat.values.size() != 4 * kCoefficients) {
                throw std::invalid_argument("feature csv: record " + rf.record_id +
                                            ": beat feature length is not 52");
            }
            out << rf.record_id << ',' << (b + 1);
            for (double v : beat.values) {
                std::snprintf(buffer, sizeof(buffer), "%.17g", v);
                out << ',' << buffer;
            }
            out << ',' << label_to_challenge(rf.label) << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("short write: " + path.string());
    }
}

std::vector<RecordFeatures> read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open feature csv: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path.string() + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != expected_header()) {
        throw std::runtime_error(path.string() + ": unexpected header");
    }

    std::vector<RecordFeatures> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != 2 + 4 * kCoefficients + 1) {
            throw std::runtime_error(where + ": expected " +
                                     std::to_string(2 + 4 * kCoefficients + 1) +
                                     " fields, got " + std::to_string(fields.size()));
        }
        const std::string& record_id = fields[0];
        const auto beat_no =
            static_cast<std::size_t>(parse_double(fields[1], where));
        const Label label = label_from_challenge(
            static_cast<int>(parse_double(fields.back(), where)));

        BeatFeatures beat;
        beat.values.reserve(4 * kCoefficients);
        for (std::size_t f = 2; f < fields.size() - 1; ++f) {
            beat.values.push_back(parse_double(fields[f], where));
        }
        beat.beat_index = beat_no - 1;

        if (records.empty() || records.back().record_id != record_id) {
            if (beat_no != 1) {
                throw std::runtime_error(where + ": record " + record_id +
                                         " does not start at beat 1");
            }
            RecordFeatures rf;
            rf.record_id = record_id;
            rf.label = label;
            records.push_back(std::move(rf));
        } else {
            if (records.back().label != label) {
                throw std::runtime_error(where + ": record " + record_id +
                                         " has inconsistent labels");
            }
            if (beat_no != records.back().beats.size() + 1) {
                throw std::runtime_error(where + ": record " + record_id +
                                         " has out-of-order beat " +
                                         std::to_string(beat_no));
            }
        }
        records.back().beats.push_back(std::move(beat));
    }

    for (const RecordFeatures& rf : records) {
        if (rf.beats.size() != kBeatsPerRecord) {
            throw std::runtime_error(path.string() + ": record " + rf.record_id +
                                     " has " + std::to_string(rf.beats.size()) +
                                     " beats, expected " +
                                     std::to_string(kBeatsPerRecord));
        }
    }
    return records;
}

} // namespace pcgkit
