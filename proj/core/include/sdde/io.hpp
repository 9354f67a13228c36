#pragma once

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>

#include "sdde/segment.hpp"

namespace sdde {

using json = nlohmann::json;

/// {grid:{r,M}, n, values:[[...]], derivs:[[...]]}; one inner array per node.
json segment_to_json(const SegmentC1& phi);

/// Parses the segment document. When `grid` is given, the document must
/// describe the same uniform grid and the result shares that pointer.
SegmentC1 segment_from_json(const json& doc, const GridPtr& grid = nullptr);

/// CSV with columns t, x1..xn, dx1..dxn on the refinement sample.
void write_segment_csv(std::ostream& out, const SegmentC1& phi,
                       int samples_per_interval = kNormSamplesPerInterval);

/// Writes via a temporary file in the same directory followed by rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Stable dump: sorted keys (nlohmann default), 17 significant digits.
std::string dump_json(const json& doc);

}  // namespace sdde
