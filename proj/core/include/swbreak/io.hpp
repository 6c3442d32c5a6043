#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace swbreak {

// Numeric table with a header row.  Written as RFC-style CSV: '.' decimal,
// '\n' line endings, every value printed with %.17g so a read-back
// reproduces the doubles bit-for-bit.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // each row as wide as the header

  std::size_t col(const std::string& name) const;  // IoError when absent
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);  // IoError
CsvTable read_csv(const std::filesystem::path& path);                      // IoError

void write_text(const std::filesystem::path& path, const std::string& text);  // IoError
std::string read_text(const std::filesystem::path& path);                     // IoError

// FNV-1a, 64-bit.
std::uint64_t fnv1a(const void* data, std::size_t bytes);
std::string fnv1a_hex(const std::string& bytes);
std::string fnv1a_file(const std::filesystem::path& path);  // IoError

// One artifact in a run directory, path relative to it.
struct FileEntry {
  std::string name;
  std::uint64_t bytes = 0;
  std::string fnv1a;
};

// Summary-of-record for a run directory.  Every emitted file appears in
// `files` with its checksum; the manifest itself is the one exception (it
// cannot checksum its own bytes).
struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::string grid_summary;
  std::string stop_reason;
  std::string verdict_summary;
  std::string error_stage;  // empty when the run completed
  std::string error_message;
  bool all_pass = false;
  std::vector<FileEntry> files;
};

// Checksum every regular file under dir (recursive, sorted relative paths,
// '/' separators) except the top-level manifest.json.
std::vector<FileEntry> index_directory(const std::filesystem::path& dir);

// Re-index dir and write dir/manifest.json; returns the manifest as written.
RunManifest write_manifest(const std::filesystem::path& dir, RunManifest manifest);
RunManifest read_manifest(const std::filesystem::path& dir);  // IoError

}  // namespace swbreak
