#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace srh {

/// In-memory CSV document with a mandatory header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by name; throws Error(invalid_input) when absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
};

CsvTable parse_csv(std::istream &in, std::string_view source = "<stream>");
CsvTable read_csv(const std::filesystem::path &path);

/// Shortest round-trippable-enough fixed formatting used for every real written to disk.
std::string format_real(double value);

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header);

    void write_row(const std::vector<std::string> &fields);
    void close();

  private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t columns_;
};

std::string escape_csv_field(std::string_view field);

/// Strict numeric parsing; `what` names the field in the Error(invalid_input) message.
double parse_real(std::string_view text, std::string_view what);
int parse_int(std::string_view text, std::string_view what);

} // namespace srh
