#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace subdiff {

/// Shortest decimal that reads back to the same double ('.' decimal point, no grouping).
std::string format_number(double value);

/// Writes a header and rows with LF line endings. Every row must match the header width.
void write_csv(std::ostream& out, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace subdiff
