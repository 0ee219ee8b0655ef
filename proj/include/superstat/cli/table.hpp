#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace superstat::cli {

/// Empty, numeric or text cell.
using Cell = std::variant<std::monostate, double, std::string>;

struct SweepTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

/// Numbers use 9 significant digits; infinities are written as inf / -inf.
std::string format_cell(const Cell& cell);
std::string to_csv(const SweepTable& table);
void write_csv(const SweepTable& table, const std::string& path);

SweepTable parse_csv(const std::string& text);
SweepTable read_csv(const std::string& path);

} // namespace superstat::cli
