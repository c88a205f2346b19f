#include "restructure/csv.hpp"

#include "restructure/domain.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace restructure::csv {

std::vector<std::string> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

Table Table::read(std::istream& in, std::string source) {
    Table t;
    t.source_ = std::move(source);
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(t.source_ + ": missing header row");
    }
    t.header_ = split_line(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != t.header_.size()) {
            throw DataError(t.source_ + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header_.size()) + " fields, got " +
                            std::to_string(cells.size()));
        }
        t.rows_.push_back(std::move(cells));
    }
    return t;
}

Table Table::read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return read(in, path.string());
}

std::size_t Table::column(std::string_view name) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
        throw DataError(source_ + ": missing required column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header_.begin());
}

bool Table::has_column(std::string_view name) const noexcept {
    return std::find(header_.begin(), header_.end(), name) != header_.end();
}

const std::string& Table::cell(std::size_t row, std::size_t col) const {
    return rows_.at(row).at(col);
}

double Table::number(std::size_t row, std::size_t col) const {
    const auto& s = cell(row, col);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw DataError(source_ + ": row " + std::to_string(row + 2) + ", column '" + header_[col] +
                    "': not a number: '" + s + "'");
}

std::int64_t Table::integer(std::size_t row, std::size_t col) const {
    const auto& s = cell(row, col);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError(source_ + ": row " + std::to_string(row + 2) + ", column '" +
                        header_[col] + "': not an integer: '" + s + "'");
    }
    return v;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw DataError("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace restructure::csv
