#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace echelon::io {

/// Deterministic float formatting shared by every CSV writer, so re-running
/// a manifest reproduces files byte for byte.
std::string format_double(double v);

/// Minimal CSV writer: fixed header, one append call per row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void row_values(const std::vector<double>& values);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 if missing
};

CsvTable read_csv(const std::string& path);

/// INI-style config sections: `[section]` lines followed by `key = value`
/// pairs, `#` comments. Keys are lowercase snake_case. Parsing collects the
/// file into section -> ordered key/value list; consumers validate keys.
struct IniFile {
  // section -> (key -> value); insertion order preserved per section
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> section_items(const std::string& section) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  std::string serialize() const;

  static IniFile parse(const std::string& text);
  static IniFile load(const std::string& path);
  void save(const std::string& path) const;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void ensure_directory(const std::string& path);

}  // namespace echelon::io
