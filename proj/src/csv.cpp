#include "nudge/csv.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

namespace nudge::csv {

ParseError::ParseError(std::size_t row, const std::string& what)
    : DataIntegrityError("row " + std::to_string(row) + ": " + what), row_(row) {}

std::optional<Row> Reader::next() {
  Row row;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool field_was_quoted = false;
  const std::size_t this_row = row_ + 1;

  for (;;) {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) {
      if (in_quotes) {
        throw ParseError(this_row, "unterminated quoted field");
      }
      if (!any) {
        return std::nullopt;
      }
      row.push_back(std::move(field));
      break;
    }
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      if (!field.empty() || field_was_quoted) {
        throw ParseError(this_row, "unexpected quote inside unquoted field");
      }
      in_quotes = true;
      field_was_quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (ch == '\r' && in_.peek() == '\n') {
      continue;
    } else if (ch == '\n') {
      row.push_back(std::move(field));
      break;
    } else {
      if (field_was_quoted) {
        throw ParseError(this_row, "characters after closing quote");
      }
      field.push_back(ch);
    }
  }
  row_ = this_row;
  return row;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool blank(const Row& row) { return row.size() == 1 && row.front().empty(); }

}  // namespace

Table Table::read(std::istream& in) {
  Reader reader(in);
  Table table;
  auto header = reader.next();
  if (!header || blank(*header)) {
    throw ParseError(1, "missing header row");
  }
  // Strip a UTF-8 byte-order mark from the first column name.
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) {
    header->front().erase(0, 3);
  }
  table.header_ = std::move(*header);
  while (auto row = reader.next()) {
    if (blank(*row)) {
      continue;
    }
    if (row->size() != table.header_.size()) {
      throw ParseError(reader.row_number(), "expected " + std::to_string(table.header_.size()) +
                                                " fields, found " + std::to_string(row->size()));
    }
    table.rows_.push_back(std::move(*row));
    table.row_numbers_.push_back(reader.row_number());
  }
  return table;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  const std::string wanted = lower(name);
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (lower(header_[i]) == wanted) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto idx = column(name)) {
    return *idx;
  }
  throw ParseError(1, "missing required column '" + std::string(name) + "'");
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (const char ch : field) {
    if (ch == '"') {
      out.push_back('"');
    }
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) {
      out << ',';
    }
    out << escape(row[i]);
  }
  out << '\n';
}

}  // namespace nudge::csv
