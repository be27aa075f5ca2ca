#pragma once

#include "srh/encoding.hpp"
#include "srh/forecast.hpp"
#include "srh/ordinal.hpp"
#include "srh/rates.hpp"
#include "srh/spatial.hpp"
#include "srh/survey.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace srh {

/// @brief Parameters of the synthetic stand-ins for the restricted inputs.
///
/// Marginals are probability vectors in category-code order. Adult education and economic status
/// are tilted per area by a standard-normal deprivation score scaled by `area_heterogeneity`, so
/// areas differ in health the way real small areas do.
struct GeneratorSpec {
    std::uint64_t seed{20220403};
    std::size_t areas{240};
    std::size_t counties{12};
    /// Residents per area are drawn uniformly from [min_area_size, max_area_size].
    std::size_t min_area_size{300};
    std::size_t max_area_size{600};
    /// Explicit sizes replace the uniform draw when non-empty (one per area).
    std::vector<std::size_t> area_sizes;

    /// Relative weight of each five-year age band 0-4 ... 100-104 (21 bands); age 105 is folded
    /// into the last band.
    std::vector<double> age_band_weights;
    double male_share{0.49};
    std::array<double, 4> citizenship{0.83, 0.02, 0.08, 0.07};
    double recent_mover_share{0.02};
    /// Share married by adult age band 15-24, 25-34, 35-44, 45-64, 65+.
    std::array<double, 5> married_share{0.02, 0.35, 0.62, 0.66, 0.52};
    /// Adult education (NF .. D) before the area tilt.
    std::array<double, 9> education{0.02, 0.10, 0.14, 0.28, 0.12, 0.10, 0.16, 0.06, 0.02};
    double area_heterogeneity{0.8};

    OrdinalModel truth;
    /// Added to every threshold when labelling survey rows, so respondents report better health
    /// than the census records and alignment has something to correct.
    double survey_threshold_shift{0.3};
    std::size_t survey_size{7500};

    int base_year{2022};
    std::vector<int> census_years{2011, 2016, 2022};
    /// ALR drift per year (against Very Bad) applied around the base year.
    std::array<double, 4> census_drift{0.0, 0.004, 0.008, 0.004};
    double census_noise{0.01};

    std::size_t facilities{6};

    /// Defaults throughout, with the ground-truth model described in default_truth_model.
    static GeneratorSpec standard();

    /// Throws Error(infeasible_spec) for invalid marginals, negative sizes or a truth model that
    /// does not match the standard encoding.
    void validate() const;

    nlohmann::json to_json() const;
    static GeneratorSpec from_json(const nlohmann::json &doc);
    static GeneratorSpec load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;
};

/// Ground truth over EncodingSchema::standard(): older age, unemployment and above all being
/// unable to work through sickness or disability push SRH worse; education and studying push it
/// better.
OrdinalModel default_truth_model();

struct SyntheticArea {
    Area area;
    GeoPoint centroid;
    double deprivation{0.0};
};

/// Areas spread over `counties` counties and the eight NUTS3 regions.
std::vector<SyntheticArea> generate_areas(const GeneratorSpec &spec);
Geography make_geography(const std::vector<SyntheticArea> &areas);

struct SyntheticPopulation {
    std::vector<Individual> people;
    /// SRH drawn from the ground truth for every adult, keyed by person id.
    std::map<PersonId, SrhCategory> srh;
};

/// Samples the base population. Married people are paired within their area, then county, then
/// nationally; anyone left over becomes single unless the spec forces everyone in their band to
/// be married, which throws Error(infeasible_spec).
SyntheticPopulation generate_population(const GeneratorSpec &spec, const std::vector<SyntheticArea> &areas,
                                        const Geography &geography);

/// Respondents drawn like the adult population and labelled by the ground truth with the survey
/// threshold shift.
std::vector<SurveyRecord> generate_survey(const GeneratorSpec &spec, const std::vector<SyntheticArea> &areas,
                                          const Geography &geography, std::size_t n);

/// Census SRH by cohort for each census year: the ground-truth expected distribution of the base
/// population at the base year, moved along the ALR drift for other years.
CensusHistory generate_census_history(const GeneratorSpec &spec, const SyntheticPopulation &population,
                                      const Geography &geography, std::span<const int> years);

/// Observed SRH proportions of each area's adults.
std::vector<std::pair<std::string, SrhDistribution>> reference_distributions(const SyntheticPopulation &population,
                                                                             const Geography &geography);

std::vector<FacilitySite> generate_facilities(const GeneratorSpec &spec);

/// Plausible rate tables for the synthetic geography, sized to its population.
RateSet default_rates(const Geography &geography, const std::vector<Individual> &people);

/// Writes geography.csv, centroids.csv, facilities.csv, population.csv, truth_srh.csv,
/// reference_areas.csv, survey.csv, census_history.csv, truth_model.json, encoding.json,
/// generator_spec.json, rates/ and scenario.json into `dir`.
void write_synthetic_bundle(const GeneratorSpec &spec, const std::filesystem::path &dir);

} // namespace srh
