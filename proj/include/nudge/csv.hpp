#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nudge/errors.hpp"

namespace nudge::csv {

/// Malformed CSV input; `row()` is the 1-based physical record number (header = 1).
class ParseError : public DataIntegrityError {
 public:
  ParseError(std::size_t row, const std::string& what);
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

using Row = std::vector<std::string>;

/*
 * RFC 4180 reader: comma-delimited, double-quoted fields with "" escapes,
 * CRLF or LF line endings, embedded newlines inside quotes.
 */
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input.
  std::optional<Row> next();
  /// Record number of the row most recently returned by next().
  std::size_t row_number() const noexcept { return row_; }

 private:
  std::istream& in_;
  std::size_t row_ = 0;
};

/// Header-indexed view. Column lookup is case-insensitive.
class Table {
 public:
  static Table read(std::istream& in);

  const Row& header() const noexcept { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;

  std::size_t size() const noexcept { return rows_.size(); }
  const Row& row(std::size_t i) const { return rows_.at(i); }
  /// File record number for data row i.
  std::size_t row_number(std::size_t i) const { return row_numbers_.at(i); }

 private:
  Row header_;
  std::vector<Row> rows_;
  std::vector<std::size_t> row_numbers_;
};

/// Quotes the field only when it contains a delimiter, quote, or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

}  // namespace nudge::csv
