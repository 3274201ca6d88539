#include "slecut/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slecut::csv {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Writer::Impl {
  std::ofstream out;
  std::size_t width = 0;
};

Writer::Writer(const std::filesystem::path& file, const std::vector<std::string>& header) : impl_(new Impl) {
  impl_->out.open(file, std::ios::binary);
  if (!impl_->out) {
    delete impl_;
    throw std::runtime_error("cannot open for writing: " + file.string());
  }
  impl_->width = header.size();
  row(header);
}

Writer::~Writer() { delete impl_; }

void Writer::row(const std::vector<std::string>& cells) {
  if (cells.size() != impl_->width) throw std::logic_error("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

void Writer::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double c : cells) s.push_back(fmt(c));
  row(s);
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error("csv column missing: " + name);
}

namespace {
std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}
}  // namespace

Table read(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + file.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw std::runtime_error("ragged csv row in " + file.string());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace slecut::csv
