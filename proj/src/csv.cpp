#include "fracslice/csv.hpp"

#include <cmath>
#include <cstdio>

namespace fracslice {

std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), path_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::sep() {
  if (in_row_) out_ << ',';
  ++in_row_;
}

CsvWriter& CsvWriter::field(const std::string& v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(double v) {
  sep();
  out_ << csv_double(v);
  return *this;
}

CsvWriter& CsvWriter::field(int64_t v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(uint64_t v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(int v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw std::runtime_error(path_ + ": row has " + std::to_string(in_row_) + " fields, header has " +
                             std::to_string(columns_));
  out_ << '\n';
  in_row_ = 0;
}

}  // namespace fracslice
