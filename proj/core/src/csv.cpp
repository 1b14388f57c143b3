#include "fleetloop/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace fleetloop {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) {
    throw std::runtime_error("format_double failed");
  }
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("not a number: \"" + std::string(s) + "\"");
  }
  return v;
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("not an integer: \"" + std::string(s) + "\"");
  }
  return v;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {
std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}
}  // namespace

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("cannot open CSV file: " + file.string());
  }
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      table.header = split_row(line);
      first = false;
    } else {
      auto cells = split_row(line);
      if (cells.size() != table.header.size()) {
        throw std::runtime_error("CSV row width mismatch in " + file.string());
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) {
    throw std::runtime_error("CSV file has no header: " + file.string());
  }
  return table;
}

CsvWriter::CsvWriter(const std::filesystem::path& file,
                     const std::vector<std::string>& header)
    : path_(file.string()), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += header[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw std::logic_error("CSV row width mismatch for " + path_);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvWriter::flush() {
  if (flushed_) return;
  std::ofstream out(path_, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write CSV file: " + path_);
  }
  out << buf_;
  if (!out) {
    throw std::runtime_error("write failed for CSV file: " + path_);
  }
  flushed_ = true;
}

}  // namespace fleetloop
