#pragma once
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace slecut::csv {

// Round-trip formatting (%.17g) so files are byte-stable across runs.
std::string fmt(double x);

class Writer {
 public:
  Writer(const std::filesystem::path& file, const std::vector<std::string>& header);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);

 private:
  struct Impl;
  Impl* impl_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;  // throws if missing
};

Table read(const std::filesystem::path& file);

}  // namespace slecut::csv
