#include "echelon/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace echelon::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw std::invalid_argument("csv row width mismatch in " + path_);
  std::ofstream out(path_, std::ios::app);
  for (size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << "\n";
}

void CsvWriter::row_values(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (std::getline(in, line)) table.header = split(line);
  size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw std::runtime_error("malformed csv row " + std::to_string(n + 2) + " in " + path);
    table.rows.push_back(std::move(cells));
    ++n;
  }
  return table;
}

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

bool IniFile::has(const std::string& section, const std::string& key) const {
  return get(section, key).has_value();
}

std::optional<std::string> IniFile::get(const std::string& section,
                                        const std::string& key) const {
  for (const auto& [name, items] : sections) {
    if (name != section) continue;
    for (const auto& [k, v] : items)
      if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> IniFile::section_items(
    const std::string& section) const {
  // repeated [section] headers merge in order
  std::vector<std::pair<std::string, std::string>> merged;
  for (const auto& [name, items] : sections)
    if (name == section) merged.insert(merged.end(), items.begin(), items.end());
  return merged;
}

void IniFile::set(const std::string& section, const std::string& key,
                  const std::string& value) {
  for (auto& [name, items] : sections) {
    if (name != section) continue;
    for (auto& [k, v] : items) {
      if (k == key) {
        v = value;
        return;
      }
    }
    items.emplace_back(key, value);
    return;
  }
  sections.emplace_back(section, std::vector<std::pair<std::string, std::string>>{{key, value}});
}

std::string IniFile::serialize() const {
  std::string out;
  for (const auto& [name, items] : sections) {
    out += "[" + name + "]\n";
    for (const auto& [k, v] : items) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

IniFile IniFile::parse(const std::string& text) {
  IniFile file;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      file.sections.emplace_back(section,
                                 std::vector<std::pair<std::string, std::string>>{});
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    if (section.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": key outside any [section]");
    file.sections.back().second.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return file;
}

IniFile IniFile::load(const std::string& path) { return parse(read_text_file(path)); }

void IniFile::save(const std::string& path) const { write_text_file(path, serialize()); }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_directory(const std::string& path) {
  std::filesystem::create_directories(path);
}

}  // namespace echelon::io
