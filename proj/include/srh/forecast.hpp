#pragma once

#include "srh/compositional.hpp"
#include "srh/core/rng.hpp"
#include "srh/gp.hpp"
#include "srh/population.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace srh {

/// Observed compositions by census year.
using CompositionHistory = std::map<int, SrhDistribution>;

/// One GP per ALR dimension of a single series.
using AlrGpSet = std::array<GpModel<double>, kSrhCategories - 1>;

inline constexpr std::size_t kDefaultForecastSamples = 1000;

struct ForecastOptions {
    std::size_t samples{kDefaultForecastSamples};
    GpFitOptions gp;
};

AlrGpSet fit_alr_gps(const CompositionHistory &history, const GpFitOptions &options = {});

/// Draws each ALR dimension independently from its posterior predictive normal at `year` and
/// maps the draw back to the simplex.
std::vector<SrhDistribution> sample_futures(const AlrGpSet &models, double year, std::size_t n,
                                            RngEngine &rng);

/// Posterior-mean composition: alr_inv of the four posterior means.
SrhDistribution posterior_mean_composition(const AlrGpSet &models, double year);

/// 1-based nearest rank: ceil(p/100 * n), clamped to [1, n].
std::size_t nearest_rank(double percentile, std::size_t n);

struct Scenarios {
    SrhDistribution mean;     ///< closure of the componentwise sample mean
    SrhDistribution raw_mean; ///< componentwise sample mean before closure
    SrhDistribution best;     ///< sample at the 95th nearest rank of Very Good
    SrhDistribution worst;    ///< sample at the 5th nearest rank of Very Good
    SrhDistribution p05;      ///< per-category 5th nearest-rank band (not a composition)
    SrhDistribution p95;      ///< per-category 95th nearest-rank band (not a composition)
};

inline constexpr std::size_t kMinScenarioSamples = 20;

/// Throws Error(too_few_samples) below kMinScenarioSamples.
Scenarios extract_scenarios(std::span<const SrhDistribution> samples);

struct ScenarioBundle {
    int year{};
    Scenarios scenarios;
    SrhDistribution posterior_mean;
    std::size_t samples{};
};

/// alr -> per-dimension GP -> Monte Carlo -> scenarios for each target year. `series_key`
/// selects the random substream so distinct series draw independently.
std::vector<ScenarioBundle> forecast_series(const CompositionHistory &history,
                                            std::span<const int> target_years,
                                            const ForecastOptions &options, std::uint64_t seed,
                                            std::uint64_t series_key = 0);

/// National indicator series.
std::vector<ScenarioBundle> forecast_national(const CompositionHistory &history,
                                              std::span<const int> target_years,
                                              const ForecastOptions &options, std::uint64_t seed);

/// Census history by cohort, plus cohort sizes where known.
struct CensusHistory {
    std::map<CohortKey, CompositionHistory> cohorts;
    std::map<CohortKey, std::map<int, double>> population;
    CompositionHistory national;

    /// National series; falls back to the population-weighted cohort aggregate.
    CompositionHistory national_series() const;
    /// Cohort sizes for a year (1.0 each when unknown).
    double population_of(const CohortKey &key, int year) const;
};

/// Per-cohort forecasts. Cohorts are processed independently with one substream each so the
/// result does not depend on `workers`.
std::map<CohortKey, std::vector<ScenarioBundle>>
forecast_cohorts(const std::map<CohortKey, CompositionHistory> &history,
                 std::span<const int> target_years, const ForecastOptions &options,
                 std::uint64_t seed, unsigned workers = 1);

// ---------------------------------------------------------------------------------------------
// Files

/// Columns: year, age_group, sex, economic_status, [population], very_good..very_bad.
/// National rows use "*" in the three key columns. Census economic-status labels are mapped to
/// microdata statuses and merged (population-weighted when sizes are given).
CensusHistory read_census_history(const std::filesystem::path &path,
                                  const AgeBanding &banding = {});
void write_census_history(const std::filesystem::path &path, const CensusHistory &history,
                          const AgeBanding &banding = {});

/// One file per target year with rows (cohort key, scenario tag, 5 proportions). Scenario tags:
/// mean, best, worst, p05, p95, alr_mean.
void write_forecast_year(const std::filesystem::path &path, int year,
                         const std::map<CohortKey, std::vector<ScenarioBundle>> &cohorts,
                         const std::vector<ScenarioBundle> *national,
                         const AgeBanding &banding = {});

/// Reads one scenario of a forecast file as a cohort -> composition map for a year; the
/// national row (if any) is returned in `national`.
std::map<CohortKey, SrhDistribution> read_forecast_scenario(const std::filesystem::path &path,
                                                            std::string_view scenario,
                                                            std::optional<SrhDistribution> *national,
                                                            const AgeBanding &banding = {});

/// Parses "2023:2057" or "2030" or "2023,2030".
std::vector<int> parse_year_range(std::string_view text);

} // namespace srh
