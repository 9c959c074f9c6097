#include "interbank/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace interbank {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (res.ec != std::errc{}) throw std::runtime_error("double formatting failed");
  return {buf, res.ptr};
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) body_ += ',';
    body_ += header_[i];
  }
  body_ += '\n';
}

void CsvTable::add_row(std::span<const double> values) {
  if (values.size() != header_.size()) throw std::invalid_argument("CSV row width does not match header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) body_ += ',';
    body_ += format_double(values[i]);
  }
  body_ += '\n';
  ++rows_;
}

CsvTable to_csv(const CoefficientPath& path) {
  std::vector<std::string> header{"t"};
  header.insert(header.end(), path.labels().begin(), path.labels().end());
  CsvTable table(std::move(header));
  std::vector<double> row(path.dimension() + 1);
  for (std::size_t n = 0; n < path.grid().n_points(); ++n) {
    row[0] = path.grid().t(n);
    const auto values = path.row(n);
    std::copy(values.begin(), values.end(), row.begin() + 1);
    table.add_row(row);
  }
  return table;
}

void write_file_atomic(const std::filesystem::path& target, std::string_view content) {
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace interbank
