#pragma once

#include "srh/population.hpp"

#include <filesystem>
#include <vector>

namespace srh {

/// Population CSV columns, in order.
inline constexpr std::array<std::string_view, 11> kPopulationColumns{
    "id", "age", "sex", "marital_status", "citizenship", "moved_last_year", "education",
    "economic_status", "area_id", "spouse_id", "graduation_year"};

/// Reads one row per individual. Area ids resolve through `geography`; optional fields are empty
/// cells; moved_last_year accepts true/false or 1/0.
std::vector<Individual> read_population(const std::filesystem::path &path, const Geography &geography);

void write_population(const std::filesystem::path &path, const std::vector<Individual> &people,
                      const Geography &geography);

/// Checks the record-level invariants: unique ids, ages in [0, 105], children without an adult
/// status (students excepted), symmetric spouse links between married people, and graduation
/// years only for students. Throws Error(invalid_input) naming the first violation.
void validate_population(const std::vector<Individual> &people, int adult_age = kAdultAge);

} // namespace srh
