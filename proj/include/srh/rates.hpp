#pragma once

#include "srh/rate_table.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace srh {

/// File name stem, key dimensions and value kind of one engine table.
struct RateSpec {
    std::string_view name;
    std::vector<std::string> dimensions;
    RateKind kind;
};

/// @brief Every table the microsimulation reads. Each lives in "<name>.csv".
///
/// | table                    | key                                                  | value |
/// |--------------------------|------------------------------------------------------|-------|
/// | mortality                | age, sex, year                                       | annual death probability |
/// | internal_flows           | from_county, to_county                               | movers per year |
/// | internal_profile         | age, sex                                             | relative propensity to move |
/// | emigration_rate          | nuts3                                                | share of residents leaving per year |
/// | emigration_profile       | age, sex                                             | relative propensity to emigrate |
/// | immigration_profile      | age, sex, citizenship                                | relative immigrant frequency |
/// | immigration_destination  | area_id                                              | relative destination weight |
/// | fertility                | age, nuts3, marital_status                           | base-year birth probability |
/// | marriage                 | nuts3                                                | yearly marriage probability of an eligible single |
/// | separation               | (none)                                               | yearly share of couples separating |
/// | dropout                  | level                                                | yearly dropout probability while studying |
/// | completion_time          | level                                                | years to complete |
/// | parental_transmission    | parent_education, target                             | lifetime target probability |
/// | returner_rate            | nuts3                                                | yearly share of 25-69 year olds re-enrolling |
/// | returner_profile         | age, sex                                             | relative propensity to re-enrol |
/// | post_exit                | level, status                                        | status after leaving education |
/// | employment               | age_group, sex, citizenship, education, from, to     | yearly transition probability |
struct RateSet {
    RateTable mortality;
    RateTable internal_flows;
    RateTable internal_profile;
    RateTable emigration_rate;
    RateTable emigration_profile;
    RateTable immigration_profile;
    RateTable immigration_destination;
    RateTable fertility;
    RateTable marriage;
    RateTable separation;
    RateTable dropout;
    RateTable completion_time;
    RateTable parental_transmission;
    RateTable returner_rate;
    RateTable returner_profile;
    RateTable post_exit;
    RateTable employment;

    RateSet();

    static const std::vector<RateSpec> &specs();

    RateTable &table(std::string_view name);
    const RateTable &table(std::string_view name) const;

    /// Reads "<dir>/<name>.csv" for every table, or the override path when given.
    /// Throws Error(missing_table) when a file is absent and Error(invalid_input) when its
    /// columns differ from the expected dimensions.
    static RateSet load(const std::filesystem::path &dir,
                        const std::map<std::string, std::filesystem::path> &overrides = {});
    void save(const std::filesystem::path &dir) const;
};

} // namespace srh
