#include "rawgrl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rawgrl/errors.hpp"

namespace rawgrl {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

CsvTable::CsvTable(std::vector<std::string> columns, std::vector<std::string> numeric)
    : columns_(std::move(columns)), numeric_(columns_.size(), false) {
  for (const auto& name : numeric) {
    auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw std::logic_error("numeric column " + name + " not in header");
    numeric_[static_cast<std::size_t>(it - columns_.begin())] = true;
  }
}

void CsvTable::add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

void CsvTable::validate() const {
  for (const auto& c : columns_) {
    if (c.empty() || c.find_first_of(",\"\n") != std::string::npos) throw std::logic_error("bad CSV column name");
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    if (row.size() != columns_.size()) {
      throw std::logic_error("CSV row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                             " cells, header has " + std::to_string(columns_.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c].find_first_of(",\"\n") != std::string::npos) {
        throw std::logic_error("CSV cell contains a delimiter in column " + columns_[c]);
      }
      if (!numeric_[c]) continue;
      double v = 0.0;
      const auto* end = row[c].data() + row[c].size();
      const auto res = std::from_chars(row[c].data(), end, v);
      if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        throw std::logic_error("CSV column " + columns_[c] + " row " + std::to_string(r) +
                               " is not a finite number: '" + row[c] + "'");
      }
    }
  }
}

std::string CsvTable::str() const {
  validate();
  std::string out;
  auto append = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append(columns_);
  for (const auto& row : rows_) append(row);
  return out;
}

void CsvTable::write(const std::string& path) const { write_text_file(path, str()); }

}  // namespace rawgrl
