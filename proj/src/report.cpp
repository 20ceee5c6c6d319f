#include "ips/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ips/errors.hpp"

namespace ips {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvWriter::comment(const std::string& text) {
  body_ += "# ";
  body_ += text;
  body_ += "\n";
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) body_ += ",";
    body_ += columns[i];
  }
  body_ += "\n";
}

void CsvWriter::begin_row() {
  row_open_ = true;
  row_has_cells_ = false;
}

void CsvWriter::cell(const std::string& value) {
  if (!row_open_) begin_row();
  if (row_has_cells_) body_ += ",";
  body_ += value;
  row_has_cells_ = true;
}

void CsvWriter::cell(double value) { cell(format_g17(value)); }

void CsvWriter::cell(long value) { cell(std::to_string(value)); }

void CsvWriter::end_row() {
  body_ += "\n";
  row_open_ = false;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << text;
  if (!os) throw Error("failed writing " + path);
}

} // namespace ips
