#include "pcgkit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pcgkit/wav.hpp"

namespace pcgkit {

namespace {

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

// Rows of `id,value`; blank lines ignored.
std::vector<std::pair<std::string, int>>
read_two_column_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<std::pair<std::string, int>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const auto comma = trimmed.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected `id,value`");
        }
        const std::string id = trim(trimmed.substr(0, comma));
        const std::string value_text = trim(trimmed.substr(comma + 1));
        try {
            rows.emplace_back(id, std::stoi(value_text));
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": bad integer `" + value_text + "`");
        }
    }
    return rows;
}

bool has_wav_files(const std::filesystem::path& dir) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".wav") {
            return true;
        }
    }
    return false;
}

void load_subset(const std::filesystem::path& dir, const std::string& subset_name,
                 DatasetManifest& manifest, std::set<std::string>& seen_ids) {
    const std::filesystem::path reference = dir / "REFERENCE.csv";
    if (!std::filesystem::exists(reference)) {
        throw std::runtime_error("subset " + subset_name +
                                 ": missing REFERENCE.csv in " + dir.string());
    }

    std::map<std::string, int> quality;
    const std::filesystem::path sqi = dir / "REFERENCE-SQI.csv";
    if (std::filesystem::exists(sqi)) {
        for (const auto& [id, value] : read_two_column_csv(sqi)) {
            quality[id] = value;
        }
    }

    manifest.source_subsets.push_back(subset_name);
    for (const auto& [id, value] : read_two_column_csv(reference)) {
        if (!seen_ids.insert(id).second) {
            throw std::runtime_error("duplicate record id " + id + " in subset " +
                                     subset_name);
        }
        ManifestEntry entry;
        entry.id = id;
        entry.wav_path = dir / (id + ".wav");
        const auto q = quality.find(id);
        if (q != quality.end() && q->second == 0) {
            entry.label = Label::uncertain;
        } else {
            entry.label = label_from_challenge(value);
        }
        if (!std::filesystem::exists(entry.wav_path)) {
            manifest.issues.push_back("record " + id + ": missing " +
                                      entry.wav_path.string());
            continue;
        }
        manifest.records.push_back(std::move(entry));
    }
}

} // namespace

DatasetManifest load_manifest(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) {
        throw std::runtime_error("dataset root is not a directory: " + root.string());
    }
    DatasetManifest manifest;
    std::set<std::string> seen_ids;

    std::vector<std::filesystem::path> subdirs;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory()) {
            subdirs.push_back(entry.path());
        }
    }
    std::sort(subdirs.begin(), subdirs.end());

    if (std::filesystem::exists(root / "REFERENCE.csv") || has_wav_files(root)) {
        load_subset(root, root.filename().string(), manifest, seen_ids);
    }
    for (const auto& dir : subdirs) {
        if (std::filesystem::exists(dir / "REFERENCE.csv") || has_wav_files(dir)) {
            load_subset(dir, dir.filename().string(), manifest, seen_ids);
        }
    }
    if (manifest.source_subsets.empty()) {
        throw std::runtime_error("no subsets with REFERENCE.csv under " + root.string());
    }
    return manifest;
}

PcgRecord load_record(const ManifestEntry& entry) {
    const WavData wav = read_wav(entry.wav_path);
    if (wav.samples.empty()) {
        throw std::runtime_error("record " + entry.id + ": empty WAV");
    }
    PcgRecord record;
    record.id = entry.id;
    record.samples = std::move(wav.samples);
    record.sample_rate = wav.sample_rate;
    record.label = entry.label;
    return record;
}

DatasetManifest
filter_usable(const DatasetManifest& manifest, std::size_t min_beats,
              const std::function<std::size_t(const ManifestEntry&)>& beat_counter,
              FilterCounts* counts) {
    DatasetManifest out;
    out.source_subsets = manifest.source_subsets;
    out.issues = manifest.issues;
    FilterCounts local;
    for (const ManifestEntry& entry : manifest.records) {
        if (entry.label == Label::uncertain) {
            ++local.dropped_uncertain;
            continue;
        }
        if (min_beats > 0 && beat_counter(entry) < min_beats) {
            ++local.dropped_short;
            continue;
        }
        (entry.label == Label::normal ? local.kept_normal : local.kept_abnormal) += 1;
        out.records.push_back(entry);
    }
    if (counts != nullptr) {
        *counts = local;
    }
    return out;
}

} // namespace pcgkit
