#pragma once

#include <filesystem>
#include <vector>

#include "pcgkit/pipeline.hpp"

namespace pcgkit {

// Per-beat feature rows:
//   record,beat,s1_c0..s1_c12,sys_c0..sys_c12,s2_c0..s2_c12,dia_c0..dia_c12,label
// beat is 1-based; label uses the -1/1 challenge convention. Values are
// written with round-trip precision.
void write_feature_csv(const std::vector<RecordFeatures>& records,
                       const std::filesystem::path& path);

// Inverse of write_feature_csv; validates the header, beat numbering, and
// per-record label consistency.
std::vector<RecordFeatures> read_feature_csv(const std::filesystem::path& path);

} // namespace pcgkit
