#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>

namespace srh {

std::size_t CsvTable::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw Error{ErrorCode::invalid_input, fmt::format("missing CSV column '{}'", name)};
    }
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {

// Splits one logical record. Quoted fields may contain commas, doubled quotes and newlines.
bool read_record(std::istream &in, std::vector<std::string> &fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (any) {
        fields.push_back(std::move(field));
    }
    return any;
}

} // namespace

CsvTable parse_csv(std::istream &in, std::string_view source) {
    CsvTable table;
    std::vector<std::string> fields;
    if (!read_record(in, fields)) {
        throw Error{ErrorCode::invalid_input, fmt::format("{}: empty CSV, header required", source)};
    }
    if (!fields.empty() && fields.front().starts_with("\xEF\xBB\xBF")) {
        fields.front().erase(0, 3);
    }
    table.header = fields;
    std::size_t line = 1;
    while (read_record(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields.front().empty()) {
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw Error{ErrorCode::invalid_input,
                        fmt::format("{}:{}: expected {} fields, found {}", source, line,
                                    table.header.size(), fields.size())};
        }
        table.rows.push_back(fields);
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw Error{ErrorCode::io, fmt::format("cannot open '{}'", path.string())};
    }
    return parse_csv(in, path.string());
}

std::string format_real(double value) {
    if (value == 0.0) {
        return "0";
    }
    return fmt::format("{:.12g}", value);
}

std::string escape_csv_field(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string{field};
    }
    std::string out{"\""};
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

CsvWriter::CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header)
    : path_{path}, columns_{header.size()} {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) {
        throw Error{ErrorCode::io, fmt::format("cannot write '{}'", path.string())};
    }
    write_row(header);
}

void CsvWriter::write_row(const std::vector<std::string> &fields) {
    if (fields.size() != columns_) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("{}: row has {} fields, header has {}", path_.string(),
                                fields.size(), columns_)};
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) {
            out_ << ',';
        }
        out_ << escape_csv_field(fields[i]);
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) {
        throw Error{ErrorCode::io, fmt::format("failed writing '{}'", path_.string())};
    }
}

double parse_real(std::string_view text, std::string_view what) {
    double value = 0.0;
    const auto *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw Error{ErrorCode::invalid_input, fmt::format("{}: '{}' is not a number", what, text)};
    }
    return value;
}

int parse_int(std::string_view text, std::string_view what) {
    int value = 0;
    const auto *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw Error{ErrorCode::invalid_input, fmt::format("{}: '{}' is not an integer", what, text)};
    }
    return value;
}

} // namespace srh
