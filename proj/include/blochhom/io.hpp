#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace blochhom {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Writes the bytes verbatim (binary mode).
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Comma separated table; numbers in shortest round-trip form.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(const std::vector<double>& values);
    std::string str() const;

private:
    std::size_t columns_;
    std::string text_;
};

using Json = nlohmann::ordered_json;

/// Two-space indented JSON with floats in shortest round-trip form (non-finite as null).
std::string dump_json(const Json& value);

/// Whitespace separated columns behind '#' comment lines, for plotting tools.
std::string plot_data(const std::vector<std::string>& comments, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);

}  // namespace blochhom
