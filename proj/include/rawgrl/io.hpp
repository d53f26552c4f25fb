#pragma once

#include <string>
#include <vector>

namespace rawgrl {

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::string& path);                             // throws IoError
void write_text_file(const std::string& path, const std::string& content);      // throws IoError

// Rectangular CSV with a fixed header. Cells listed in `numeric` must parse as
// finite numbers; validate() runs before every serialization.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns, std::vector<std::string> numeric = {});

  void add_row(std::vector<std::string> cells);
  std::size_t num_rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  void validate() const;  // throws std::logic_error
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<bool> numeric_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace rawgrl
