#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace svlq::app {

using Cell = std::variant<double, long long, std::string>;

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

std::string code_version();

// First line "# config_hash=<16 hex> version=<v>", then the header and rows.
// Doubles use %.17g so the text round-trips; no timings are written.
std::string format_csv(const CsvTable& table, std::uint64_t config_hash);
void write_csv(const std::string& path, const CsvTable& table, std::uint64_t config_hash);

}  // namespace svlq::app
