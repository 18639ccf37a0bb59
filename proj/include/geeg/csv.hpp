#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace geeg::csv {

// RFC 4180: fields containing comma, quote, CR or LF are quoted and inner
// quotes doubled. Rows end with CRLF.
std::string escape(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  bool truncated_tail = false;  // last line lacked a terminator and was dropped

  // Column position by name; throws FileLoad when absent.
  std::size_t column(std::string_view name) const;
};

// Parses RFC 4180 text. A trailing row without line terminator is treated
// as an interrupted write: it is dropped and truncated_tail is set.
Table parse(std::string_view text);

// Reads and parses a file; throws FileLoad naming the path on failure.
Table read_file(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

}  // namespace geeg::csv
