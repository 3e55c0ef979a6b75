#pragma once

// CSV/JSON dataset output with atomic writes and a content-hashed manifest.
//
// CSV layout: "# meta: key=value" lines, one header row, then data rows;
// comma separated, '.' decimal point, LF endings, shortest round-trip floats.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ereem/ramsey.hpp"

namespace ereem {

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_meta(const std::string& key, const std::string& value) { meta.emplace_back(key, value); }
  void add_meta(const std::string& key, double value);
  void add_row(const std::vector<double>& values);
  /// Appends one column of values as rows; all columns must share a length.
  static CsvTable from_columns(const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols);

  std::string str() const;
  /// Column by header name, parsed as doubles.
  std::vector<double> column(const std::string& name) const;
  const std::string* find_meta(const std::string& key) const;
};

/// Throws IoError on malformed input (ragged rows, missing header).
CsvTable parse_csv(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& content);

struct ManifestEntry {
  std::string path;  // relative to the output root
  std::string sha256;
  std::size_t bytes = 0;
};

/// Collects every emitted file; write_manifest() adds manifest.json.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void write(const std::string& relative, const std::string& content);
  void write_csv(const std::string& relative, const CsvTable& table) { write(relative, table.str()); }
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  /// Manifest JSON listing files in emission order; `extra` is merged in at
  /// the top level.
  std::string write_manifest(const std::string& command, const std::string& extra_json = "{}");

 private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> entries_;
};

CsvTable trace_to_csv(const RamseyTrace& trace);
/// Reads the trace format written by trace_to_csv. Metadata lines are
/// optional; missing ones fall back to TraceMetadata defaults and "ingested".
RamseyTrace trace_from_csv(const CsvTable& table);

}  // namespace ereem
