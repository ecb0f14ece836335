#include "dyadcharge/field_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dyadcharge/errors.hpp"

namespace dyadcharge {

namespace {

enum class Payload { Csv, Bin };

Payload payload_of(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return Payload::Csv;
  if (ext == ".bin") return Payload::Bin;
  throw ValidationError("field files must end in .csv or .bin: " + path.string());
}

struct RawField {
  int dim = 0;
  int resolution = 0;
  std::string kind;
  std::vector<double> values;
};

void write_raw(const std::filesystem::path& path, const char* kind, int dim, int resolution,
               const std::vector<double>& values) {
  const auto payload = payload_of(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericalError("cannot open for writing: " + path.string());
  nlohmann::json header{{"dim", dim}, {"resolution", resolution}, {"kind", kind}};
  out << header.dump() << '\n';
  if (payload == Payload::Csv) {
    out << "value\n";
    char buf[40];
    for (double v : values) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out << buf;
    }
  } else {
    static_assert(std::endian::native == std::endian::little, "binary field I/O assumes little-endian");
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!out) throw NumericalError("write failed: " + path.string());
}

RawField read_raw(const std::filesystem::path& path, bool header_only = false) {
  const auto payload = payload_of(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericalError("cannot open: " + path.string());
  std::string line;
  std::getline(in, line);
  RawField raw;
  try {
    const auto header = nlohmann::json::parse(line);
    raw.dim = header.at("dim").get<int>();
    raw.resolution = header.at("resolution").get<int>();
    raw.kind = header.at("kind").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad field header in " + path.string() + ": " + e.what());
  }
  if (header_only) return raw;
  if (payload == Payload::Csv) {
    std::getline(in, line);
    if (line != "value") throw ValidationError("missing CSV header row in " + path.string());
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(line.c_str(), &end);
      if (end == line.c_str()) throw ValidationError("bad number in " + path.string() + ": " + line);
      raw.values.push_back(v);
    }
  } else {
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto bytes = buf.str();
    if (bytes.size() % sizeof(double) != 0) throw ValidationError("truncated binary payload: " + path.string());
    raw.values.resize(bytes.size() / sizeof(double));
    std::memcpy(raw.values.data(), bytes.data(), bytes.size());
  }
  return raw;
}

}  // namespace

void write_field(const std::filesystem::path& path, const VertexField& f) {
  write_raw(path, "vertex", f.dim(), f.resolution(), f.values());
}

void write_field(const std::filesystem::path& path, const CellField& f) {
  write_raw(path, "cell", f.dim(), f.resolution(), f.values());
}

VertexField read_vertex_field(const std::filesystem::path& path) {
  auto raw = read_raw(path);
  if (raw.kind != "vertex") throw ValidationError(path.string() + " is not a vertex field");
  return VertexField(raw.dim, raw.resolution, std::move(raw.values));
}

CellField read_cell_field(const std::filesystem::path& path) {
  auto raw = read_raw(path);
  if (raw.kind != "cell") throw ValidationError(path.string() + " is not a cell field");
  return CellField(raw.dim, raw.resolution, std::move(raw.values));
}

std::string read_field_kind(const std::filesystem::path& path) { return read_raw(path, true).kind; }

}  // namespace dyadcharge
