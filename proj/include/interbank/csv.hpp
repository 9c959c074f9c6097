#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "interbank/riccati.hpp"

namespace interbank {

/// Round-trip text for a double with 17 significant digits.
std::string format_double(double value);

/// In-memory CSV document with a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t n_rows() const { return rows_; }
  void add_row(std::span<const double> values);
  std::string str() const { return body_; }

 private:
  std::vector<std::string> header_;
  std::string body_;
  std::size_t rows_ = 0;
};

/// Columns t, then one column per coefficient label.
CsvTable to_csv(const CoefficientPath& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& target, std::string_view content);

}  // namespace interbank
