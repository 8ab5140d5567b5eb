#include "kuramoto/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace kuramoto {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     const std::string& manifest_id)
    : out_(path), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
  if (!manifest_id.empty()) out_ << "# manifest=" << manifest_id << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

void CsvWriter::sep() {
  if (in_row_) out_ << ',';
  ++in_row_;
}

void CsvWriter::cell(double v) {
  sep();
  out_ << format_double(v);
}

void CsvWriter::cell(int v) {
  sep();
  out_ << v;
}

void CsvWriter::cell(std::int64_t v) {
  sep();
  out_ << v;
}

void CsvWriter::cell(std::uint64_t v) {
  sep();
  out_ << v;
}

void CsvWriter::cell(const std::string& v) {
  sep();
  out_ << v;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw std::logic_error("CsvWriter: row width mismatch");
  out_ << '\n';
  in_row_ = 0;
}

}  // namespace kuramoto
