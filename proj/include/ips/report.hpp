#pragma once

#include <string>
#include <vector>

namespace ips {

// Shortest representation that round-trips a double (17 significant digits).
std::string format_g17(double x);

// Minimal CSV accumulator: comma separators, LF line endings, numeric cells
// written with format_g17.  Reports never embed timestamps, so bodies are
// reproducible byte for byte.
class CsvWriter {
public:
  // Comment lines (prefixed with '# ') placed before the header.
  void comment(const std::string& text);
  void header(const std::vector<std::string>& columns);
  void begin_row();
  void cell(const std::string& value);
  void cell(double value);
  void cell(long value);
  void end_row();
  const std::string& body() const { return body_; }

private:
  std::string body_;
  bool row_open_ = false;
  bool row_has_cells_ = false;
};

// Writes text to path (creating parent directories), LF endings as-is.
void write_text_file(const std::string& path, const std::string& text);

} // namespace ips
