#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace srh {

enum class MigrationScenario { M1, M2, M3 };

std::string_view to_string(MigrationScenario scenario) noexcept;
/// Throws Error(unknown_scenario).
MigrationScenario parse_migration_scenario(std::string_view text);

inline constexpr int kMigrationAnchorYear = 2023;

/// Net international migration for a simulated year. Every scenario starts at +75,000 in the
/// anchor year and falls in equal annual steps to its printed levels: M1 45,000 by 2027; M2 30,000
/// by 2032; M3 25,000 by 2027 then 10,000 by 2032. Levels stay constant after the last anchor and
/// equal the starting level before the anchor year.
long net_migration_target(MigrationScenario scenario, int year, int anchor_year = kMigrationAnchorYear);

/// Piecewise-linear year -> TFR lookup, constant outside the anchor range.
class TfrSchedule {
  public:
    TfrSchedule() = default;
    /// Throws Error(invalid_config) when empty or any TFR lies outside (0, 5).
    explicit TfrSchedule(std::map<int, double> anchors);

    /// 1.55 in 2022 falling linearly to 1.3 in 2038.
    static TfrSchedule standard();

    double at(int year) const;
    const std::map<int, double> &anchors() const noexcept { return anchors_; }

  private:
    std::map<int, double> anchors_;
};

/// @brief Settings of one projection.
struct ScenarioConfig {
    MigrationScenario migration_scenario{MigrationScenario::M1};
    int start_year{2022};
    int end_year{2057};
    TfrSchedule tfr_schedule{TfrSchedule::standard()};
    /// Year whose fertility profile the rate tables hold; births scale by TFR(y) / TFR(base).
    int fertility_base_year{2022};
    int migration_anchor_year{kMigrationAnchorYear};
    /// Multiplies the scenario's net migration, for populations smaller than the country.
    double net_migration_scale{1.0};
    std::uint64_t seed{20220403};
    int runs{5};
    double male_birth_probability{0.5};
    /// Cost of one education level relative to one year of age difference in marriage matching.
    double marriage_education_weight{2.0};
    int min_marriage_age{18};
    int min_fertility_age{15};
    int max_fertility_age{49};
    /// Directory holding the rate tables (relative paths resolve against the config file).
    std::filesystem::path rates_dir{"rates"};
    /// Per-table overrides of the file name inside rates_dir.
    std::map<std::string, std::filesystem::path> rate_table_paths;
    /// 0 selects the hardware concurrency.
    unsigned workers{0};

    /// Throws Error(invalid_config).
    void validate() const;

    /// fertility scale TFR(year) / TFR(fertility_base_year).
    double fertility_scale(int year) const;
    long net_migration(int year) const;

    nlohmann::json to_json() const;
    static ScenarioConfig from_json(const nlohmann::json &doc);
    /// Relative rates_dir and rate_table_paths are resolved against the file's directory.
    static ScenarioConfig load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;
};

} // namespace srh
