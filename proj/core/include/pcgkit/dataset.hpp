#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pcgkit/label.hpp"

namespace pcgkit {

struct PcgRecord {
    std::string id;
    std::vector<double> samples;
    double sample_rate = 0.0;
    Label label = Label::uncertain;
};

struct ManifestEntry {
    std::string id;
    std::filesystem::path wav_path;
    Label label = Label::uncertain;
};

struct DatasetManifest {
    std::vector<ManifestEntry> records;
    std::vector<std::string> source_subsets;
    // Entry-level problems (such as a labeled record whose WAV is missing);
    // collected rather than fatal.
    std::vector<std::string> issues;
};

// Scans root for subset directories: any directory (root included) holding a
// REFERENCE.csv with rows `id,label` (-1 normal, 1 abnormal). An optional
// REFERENCE-SQI.csv with rows `id,quality` marks quality-0 records uncertain.
// A directory holding WAV files but no REFERENCE.csv is an error naming it.
DatasetManifest load_manifest(const std::filesystem::path& root);

PcgRecord load_record(const ManifestEntry& entry);

struct FilterCounts {
    std::size_t kept_normal = 0;
    std::size_t kept_abnormal = 0;
    std::size_t dropped_uncertain = 0;
    std::size_t dropped_short = 0;
};

// Drops uncertain records, then records whose complete-beat count falls below
// min_beats.
DatasetManifest
filter_usable(const DatasetManifest& manifest, std::size_t min_beats,
              const std::function<std::size_t(const ManifestEntry&)>& beat_counter,
              FilterCounts* counts = nullptr);

} // namespace pcgkit
