#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pbrwp {

// 17 significant digits: enough for binary64 values to round-trip exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Particle snapshot: header x_1..x_d, one row per particle, LF endings.
inline void write_particles_csv(const std::string& path,
                                const Eigen::MatrixXd& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (int i = 0; i < x.rows(); ++i)
    out << (i ? "," : "") << "x_" << (i + 1);
  out << "\n";
  for (int j = 0; j < x.cols(); ++j) {
    for (int i = 0; i < x.rows(); ++i)
      out << (i ? "," : "") << format_double(x(i, j));
    out << "\n";
  }
}

inline Eigen::MatrixXd read_particles_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty particle file: " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd x(rows[0].size(), rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows[0].size())
      throw std::runtime_error("ragged particle file: " + path);
    for (std::size_t i = 0; i < rows[j].size(); ++i)
      x(static_cast<int>(i), static_cast<int>(j)) = rows[j][i];
  }
  return x;
}

// Generic numeric table reader; empty cells become NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty csv: " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      row.push_back(cell.empty() ? std::nan("") : std::stod(cell));
    while (row.size() < table.header.size()) row.push_back(std::nan(""));
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Minimal INI reader: [section] headers, key = value lines, '#' or ';'
// comments. Keys are addressed as "section.key".
class IniFile {
 public:
  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  static IniFile parse_string(const std::string& text) {
    IniFile ini;
    std::stringstream ss(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(ss, line)) {
      ++line_no;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": malformed section header");
        section = strip(s.substr(1, s.size() - 2));
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": expected key = value");
      std::string key = strip(s.substr(0, eq));
      std::string value = strip(s.substr(eq + 1));
      if (auto hash = value.find('#'); hash != std::string::npos)
        value = strip(value.substr(0, hash));
      ini.values_[section.empty() ? key : section + "." + key] = value;
    }
    return ini;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::runtime_error("config key missing: " + key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(std::stod(cell));
  }
  return out;
}

}  // namespace pbrwp
