#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fingan::csv {

using Record = std::vector<std::string>;

// RFC-4180 reader: comma separated, double-quote escaping, CRLF or LF line
// endings, optional UTF-8 byte order mark. Blank lines are skipped.
std::vector<Record> parse(std::string_view text);

std::string quote(std::string_view field);

}  // namespace fingan::csv
