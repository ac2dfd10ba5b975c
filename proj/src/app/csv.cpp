#include "svlq/app/csv.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace svlq::app {

void CsvTable::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("csv row width does not match header");
    rows.push_back(std::move(row));
}

std::string code_version() { return SVLQ_VERSION; }

namespace {

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return fmt::format("{:.17g}", *d);
    if (const auto* i = std::get_if<long long>(&c)) return fmt::format("{}", *i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

}  // namespace

std::string format_csv(const CsvTable& table, std::uint64_t config_hash) {
    std::string out = fmt::format("# config_hash={:016x} version={}\n", config_hash, code_version());
    for (std::size_t j = 0; j < table.columns.size(); ++j) out += (j ? "," : "") + table.columns[j];
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + cell_text(row[j]);
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const CsvTable& table, std::uint64_t config_hash) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << format_csv(table, config_hash);
    if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace svlq::app
