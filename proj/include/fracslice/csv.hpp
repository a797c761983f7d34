#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracslice {

/// Formats doubles with enough digits to round-trip, so reruns with the same
/// configuration and seed produce byte-identical files.
std::string csv_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& field(const std::string& v);
  CsvWriter& field(double v);
  CsvWriter& field(int64_t v);
  CsvWriter& field(uint64_t v);
  CsvWriter& field(int v);
  void end_row();

  const std::string& path() const { return path_; }

 private:
  void sep();
  std::ofstream out_;
  std::string path_;
  size_t columns_ = 0;
  size_t in_row_ = 0;
};

}  // namespace fracslice
