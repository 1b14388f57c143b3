#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fleetloop {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; -1 when absent.
  int column(std::string_view name) const;
};

/// Reads a whole CSV file. No quoting support; the artifact's tables never
/// contain commas inside fields.
CsvTable read_csv(const std::filesystem::path& file);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file,
            const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void flush();

 private:
  std::string path_;
  std::string buf_;
  std::size_t columns_;
  bool flushed_{false};
};

}  // namespace fleetloop
