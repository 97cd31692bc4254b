#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace polymerlab {

/// %.17g, which round-trips every finite double.
std::string format_real(double x);

/// RFC-4180 writer: CRLF records, fields quoted only when needed.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  std::size_t columns() const noexcept { return columns_; }

 private:
  std::ostream& out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Parses RFC-4180 text; throws DomainError on malformed quoting, bare LF
/// record ends or ragged rows.
CsvTable parse_csv(std::string_view text);

struct CsvCheck {
  bool ok = false;
  std::size_t rows = 0;
  std::size_t columns = 0;
  std::string message;
};

/// Structural validation plus unique, non-empty header names and numeric
/// content: every non-empty field must parse completely as a double.
CsvCheck check_csv(std::string_view text);

}  // namespace polymerlab
