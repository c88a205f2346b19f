#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace restructure::csv {

/// Minimal comma-separated table: no quoting, header row required. Values
/// in this project never contain commas.
class Table {
public:
    static Table read(std::istream& in, std::string source = "<stream>");
    static Table read_file(const std::filesystem::path& path);

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return rows_.size(); }
    const std::string& source() const noexcept { return source_; }

    /// Index of a column; throws DataError naming the source and column.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const noexcept;

    const std::string& cell(std::size_t row, std::size_t col) const;
    double number(std::size_t row, std::size_t col) const;
    std::int64_t integer(std::size_t row, std::size_t col) const;

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> split_line(std::string_view line);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace restructure::csv
