#pragma once

// On-disk format for sampled fields.
//
// Line 1 is a JSON header {"dim", "resolution", "kind"} with kind "vertex" or
// "cell". The payload is the flat row-major float64 array:
//   *.csv : a "value" header row, then one value per line (%.17g)
//   *.bin : raw little-endian float64
// Any other extension is rejected.

#include <filesystem>
#include <string>

#include "dyadcharge/dyadic.hpp"

namespace dyadcharge {

void write_field(const std::filesystem::path& path, const VertexField& f);
void write_field(const std::filesystem::path& path, const CellField& f);

VertexField read_vertex_field(const std::filesystem::path& path);
CellField read_cell_field(const std::filesystem::path& path);

/// "vertex" or "cell", read from the header only.
std::string read_field_kind(const std::filesystem::path& path);

}  // namespace dyadcharge
