#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace clignet::csv {

using Row = std::vector<std::string>;

/// Parses RFC-4180 CSV: comma separated, double-quote quoting with "" escapes,
/// quoted fields may span lines, CRLF or LF row endings. A UTF-8 BOM on the
/// first field is dropped. Throws InputError naming the 1-based data row
/// (header = row 0) on malformed quoting.
std::vector<Row> parse(std::istream& in);
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

}  // namespace clignet::csv
