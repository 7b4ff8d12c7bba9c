#include "subdiff/csv.hpp"

#include <charconv>
#include <cmath>

#include "subdiff/errors.hpp"

namespace subdiff {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows) {
    auto line = [&](std::span<const std::string> cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    line(header);
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw ParameterError("CSV row width does not match its header");
        line(row);
    }
}

}  // namespace subdiff
