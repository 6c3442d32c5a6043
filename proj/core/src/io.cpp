#include "swbreak/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "swbreak/errors.hpp"

namespace swbreak {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw IoError("read_csv: bad numeric cell '" + cell + "' in " + path.string());
  }
  if (used != cell.size())
    throw IoError("read_csv: trailing junk in cell '" + cell + "' in " + path.string());
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::size_t CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("CsvTable: no column named '" + name + "'");
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (table.header.empty()) throw IoError("write_csv: empty header");
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw IoError("write_csv: row width does not match header in " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_g17(row[i]);
    }
    out += '\n';
  }
  write_text(path, out);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("read_csv: empty file " + path.string());
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != table.header.size())
      throw IoError("read_csv: ragged row in " + path.string());
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_cell(cells[i], path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

std::uint64_t fnv1a(const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return buf;
}

std::string fnv1a_file(const std::filesystem::path& path) {
  return fnv1a_hex(read_text(path));
}

std::vector<FileEntry> index_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("index_directory: not a directory: " + dir.string());
  std::vector<FileEntry> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    const std::string bytes = read_text(entry.path());
    files.push_back({std::move(rel), bytes.size(), fnv1a_hex(bytes)});
  }
  std::sort(files.begin(), files.end(),
            [](const FileEntry& a, const FileEntry& b) { return a.name < b.name; });
  return files;
}

RunManifest write_manifest(const std::filesystem::path& dir, RunManifest manifest) {
  manifest.files = index_directory(dir);
  ordered_json j;
  j["config_hash"] = manifest.config_hash;
  j["code_version"] = manifest.code_version;
  j["grid_summary"] = manifest.grid_summary;
  j["stop_reason"] = manifest.stop_reason;
  j["verdict_summary"] = manifest.verdict_summary;
  j["all_pass"] = manifest.all_pass;
  j["error_stage"] = manifest.error_stage;
  j["error_message"] = manifest.error_message;
  j["files"] = ordered_json::array();
  for (const FileEntry& f : manifest.files)
    j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a", f.fnv1a}});
  write_text(dir / "manifest.json", j.dump(2) + "\n");
  return manifest;
}

RunManifest read_manifest(const std::filesystem::path& dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("read_manifest: " + std::string(e.what()));
  }
  RunManifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    m.code_version = j.at("code_version").get<std::string>();
    m.grid_summary = j.at("grid_summary").get<std::string>();
    m.stop_reason = j.at("stop_reason").get<std::string>();
    m.verdict_summary = j.at("verdict_summary").get<std::string>();
    m.all_pass = j.at("all_pass").get<bool>();
    m.error_stage = j.at("error_stage").get<std::string>();
    m.error_message = j.at("error_message").get<std::string>();
    for (const auto& f : j.at("files"))
      m.files.push_back({f.at("name").get<std::string>(), f.at("bytes").get<std::uint64_t>(),
                         f.at("fnv1a").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw IoError("read_manifest: missing field: " + std::string(e.what()));
  }
  return m;
}

}  // namespace swbreak
