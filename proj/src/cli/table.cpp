#include "superstat/cli/table.hpp"

#include "superstat/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace superstat::cli {

namespace {

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

Cell parse_field(const std::string& field, bool quoted)
{
    if (quoted) return field;
    if (field.empty()) return std::monostate{};
    if (field == "inf") return INFINITY;
    if (field == "-inf") return -INFINITY;
    if (field == "nan") return NAN;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() + field.size() && errno != ERANGE) return v;
    return field;
}

} // namespace

void SweepTable::add_row(std::vector<Cell> row)
{
    if (row.size() != columns.size()) throw std::logic_error("SweepTable: row width does not match the header");
    rows.push_back(std::move(row));
}

std::string format_cell(const Cell& cell)
{
    if (std::holds_alternative<std::monostate>(cell)) return {};
    if (const auto* s = std::get_if<std::string>(&cell)) return quote(*s);
    const double v = std::get<double>(cell);
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string to_csv(const SweepTable& table)
{
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += quote(table.columns[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_cell(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const SweepTable& table, const std::string& path)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::ios_base::failure("cannot open '" + path + "' for writing");
    f << to_csv(table);
    f.flush();
    if (!f) throw std::ios_base::failure("failed writing '" + path + "'");
}

SweepTable parse_csv(const std::string& text)
{
    std::vector<std::vector<std::pair<std::string, bool>>> records;
    std::vector<std::pair<std::string, bool>> record;
    std::string field;
    bool quoted = false;
    bool in_quotes = false;
    bool any = false;
    auto end_field = [&] {
        record.emplace_back(field, quoted);
        field.clear();
        quoted = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        any = true;
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            in_quotes = true;
            quoted = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_field();
            records.push_back(std::move(record));
            record.clear();
            any = false;
        } else {
            field += ch;
        }
    }
    if (in_quotes) throw ConfigError("csv: unterminated quoted field");
    if (any) {
        end_field();
        records.push_back(std::move(record));
    }

    SweepTable table;
    if (records.empty()) return table;
    for (const auto& [name, q] : records.front()) table.columns.push_back(name);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.columns.size()) throw ConfigError("csv: ragged row " + std::to_string(r));
        std::vector<Cell> row;
        for (const auto& [f, q] : records[r]) row.push_back(parse_field(f, q));
        table.rows.push_back(std::move(row));
    }
    return table;
}

SweepTable read_csv(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << f.rdbuf();
    return parse_csv(os.str());
}

} // namespace superstat::cli
