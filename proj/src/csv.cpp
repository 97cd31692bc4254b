#include "polymerlab/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <set>

#include "polymerlab/error.hpp"

namespace polymerlab {

namespace {

bool needs_quotes(std::string_view f) { return f.find_first_of(",\"\r\n") != std::string_view::npos; }

void write_field(std::ostream& out, std::string_view f) {
  if (!needs_quotes(f)) {
    out << f;
    return;
  }
  out << '"';
  for (char c : f) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

bool parses_as_real(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

}  // namespace

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_)
    throw InconsistencyError("csv row width differs from header",
                             std::to_string(fields.size()) + " vs " + std::to_string(columns_));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    write_field(out_, fields[i]);
  }
  out_ << "\r\n";
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  std::size_t i = 0, line = 1;
  auto fail = [&](const char* what) { throw DomainError(what, "line " + std::to_string(line)); };
  while (i < text.size()) {
    if (text[i] == '"') {
      ++i;
      for (;;) {
        if (i >= text.size()) fail("unterminated quoted field");
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += text[i++];
      }
      if (i < text.size() && text[i] != ',' && text[i] != '\r') fail("characters after closing quote");
    } else {
      while (i < text.size() && text[i] != ',' && text[i] != '\r' && text[i] != '\n' && text[i] != '"')
        field += text[i++];
      if (i < text.size() && text[i] == '"') fail("quote inside unquoted field");
      if (i < text.size() && text[i] == '\n') fail("record ends with LF instead of CRLF");
    }
    if (i >= text.size()) fail("last record lacks CRLF");
    if (text[i] == ',') {
      record.push_back(std::move(field));
      field.clear();
      ++i;
      continue;
    }
    if (i + 1 >= text.size() || text[i + 1] != '\n') fail("bare CR in record terminator");
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    i += 2;
    ++line;
  }
  if (records.empty()) throw DomainError("csv has no header");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size())
      throw DomainError("row width differs from header", "line " + std::to_string(r + 1));
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvCheck check_csv(std::string_view text) {
  CsvCheck result;
  try {
    CsvTable t = parse_csv(text);
    result.rows = t.rows.size();
    result.columns = t.header.size();
    std::set<std::string> names;
    for (const auto& h : t.header) {
      if (h.empty()) throw DomainError("empty header name");
      if (!names.insert(h).second) throw DomainError("duplicate header name", h);
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
        const auto& f = t.rows[r][c];
        if (!f.empty() && !parses_as_real(f))
          throw DomainError("non-numeric field in column " + t.header[c], "line " + std::to_string(r + 2));
      }
    result.ok = true;
    result.message = "ok";
  } catch (const DomainError& e) {
    result.ok = false;
    result.message = std::string(e.what()) + (e.context().empty() ? "" : " (" + e.context() + ")");
  }
  return result;
}

}  // namespace polymerlab
