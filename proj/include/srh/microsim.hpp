#pragma once

#include "srh/core/rng.hpp"
#include "srh/population.hpp"
#include "srh/rates.hpp"
#include "srh/scenario.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace srh {

/// @brief The simulated population at the end of `year`.
///
/// People are kept sorted by id; new individuals always receive ids above every existing one.
struct PopulationState {
    int year{0};
    std::vector<Individual> people;
    PersonId next_id{1};

    std::optional<std::size_t> index_of(PersonId id) const;
    /// Indices of the people living in each area.
    std::vector<std::vector<std::size_t>> area_members(std::size_t areas) const;
};

/// Bookkeeping for one simulated year. Counts are whole numbers for a single run and means when
/// produced by average_accounts.
struct YearAccount {
    int year{0};
    double population_start{0};
    double deaths{0};
    double births{0};
    double emigrants{0};
    double immigrants{0};
    double net_international{0};
    double internal_moves{0};
    /// Arrivals minus departures per county, in geography county order.
    std::vector<double> net_internal_by_county;
    double separations{0};
    double marriages{0};
    double graduations{0};
    double dropouts{0};
    double returners{0};
    double population_end{0};
};

void write_accounts(const std::filesystem::path &path, const std::vector<YearAccount> &accounts,
                    const Geography &geography);

/// Mean over runs of every count, year by year. All runs must cover the same years.
std::vector<YearAccount> average_accounts(const std::vector<std::vector<YearAccount>> &runs);

/// Next education level a student moves on to, given what they have attained and their lifetime
/// target; nullopt when the target is already reached.
std::optional<Education> next_level(Education attained, Education target);
/// Highest attainment assumed for someone currently studying `level`.
Education level_below(Education level);

/// @brief Year-by-year projection engine.
///
/// Each year runs mortality, internal migration, international migration, fertility, marriage,
/// education and employment in that order. Every step draws from its own substream keyed by
/// (seed, step, run, year), so a run is reproducible bit for bit.
class Simulation {
  public:
    Simulation(const ScenarioConfig &config, const Geography &geography, const RateSet &rates, int run = 0);

    /// Sorts the base population by id, links unmatched married people into couples and gives
    /// students a study level, an attainment one step below it and a graduation year.
    PopulationState initialize(std::vector<Individual> base) const;

    void step_mortality(PopulationState &state, YearAccount &account) const;
    void step_internal_migration(PopulationState &state, YearAccount &account) const;
    void step_international_migration(PopulationState &state, YearAccount &account) const;
    void step_fertility(PopulationState &state, YearAccount &account) const;
    void step_marriage(PopulationState &state, YearAccount &account) const;
    void step_education(PopulationState &state, YearAccount &account) const;
    void step_employment(PopulationState &state, YearAccount &account) const;

    /// Advances one year. Throws if the population accounting does not balance.
    YearAccount step_year(PopulationState &state) const;

    using Observer = std::function<void(const PopulationState &)>;
    /// Steps from the state's year to config.end_year, calling `observer` for the starting state
    /// and after every year.
    std::vector<YearAccount> run(PopulationState &state, const Observer &observer = {}) const;

    const ScenarioConfig &config() const noexcept { return config_; }
    const Geography &geography() const noexcept { return geography_; }

  private:
    static constexpr std::size_t kAges = kMaxAge + 1;
    using AgeSexTable = std::array<double, 2 * kAges>;

    struct Distribution {
        std::vector<double> cumulative;
        double total{0.0};
    };

    RngEngine stream(StreamTag tag, int year) const;
    const AgeSexTable &mortality_for(int year) const;
    AgeSexTable age_sex_weights(const RateTable &table) const;
    std::array<double, category_count<EconomicStatus>> employment_row(const Individual &person) const;
    Education sample_target(std::optional<Education> parent, RngEngine &rng) const;
    EconomicStatus sample_post_exit(Education level, RngEngine &rng) const;
    void place_immigrants(PopulationState &state, std::vector<Individual> donors, long count,
                          RngEngine &rng) const;
    int completion_years(Education level) const;
    void leave_education(Individual &person, RngEngine &rng) const;
    void enrol(Individual &person, Education level, int year) const;
    void match_couples(std::vector<Individual> &people, std::vector<std::size_t> women,
                       std::vector<std::size_t> men, std::size_t pairs, RngEngine &rng) const;

    ScenarioConfig config_;
    const Geography &geography_;
    const RateSet &rates_;
    int run_;

    // Compiled lookups.
    std::vector<int> mortality_years_;
    mutable std::vector<std::pair<int, AgeSexTable>> mortality_cache_;
    AgeSexTable internal_profile_{};
    AgeSexTable emigration_profile_{};
    AgeSexTable returner_profile_{};
    std::vector<double> emigration_rate_;   // per NUTS3
    std::vector<double> marriage_rate_;     // per NUTS3
    std::vector<double> returner_rate_;     // per NUTS3
    std::vector<double> immigration_cells_; // (age, sex, citizenship) weights
    Distribution destination_;              // over areas
    std::vector<double> fertility_;         // (age offset, nuts3, marital status)
    double separation_ratio_{0.0};
    std::array<double, category_count<Education>> dropout_{};
    std::array<int, category_count<Education>> completion_{};
    struct Flow {
        std::size_t from;
        std::size_t to;
        long movers;
    };
    std::vector<Flow> flows_;
    using CategoryRow = std::vector<std::pair<std::uint8_t, double>>; // cumulative
    std::array<CategoryRow, category_count<Education>> transmission_;
    std::array<CategoryRow, category_count<Education>> post_exit_;
    mutable std::vector<std::optional<std::array<double, category_count<EconomicStatus>>>> employment_cache_;
};

} // namespace srh
