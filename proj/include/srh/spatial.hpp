#pragma once

#include "srh/population.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace srh {

/// @brief Per-area outcome summary.
struct AreaResult {
    std::string area_id;
    /// Adult count; a mean over runs when results are averaged.
    double adults{0.0};
    SrhDistribution predicted{SrhDistribution::Zero()};
    std::optional<SrhDistribution> reference;
    double mean_srh{0.0};
    double mean_age{0.0};
    /// Mean of the NF=0 .. D=8 education scale.
    double mean_education{0.0};
    std::optional<double> r2;
    std::optional<double> mse;
};

/// Normalised category frequencies. Throws Error(empty_area) for an empty slice.
SrhDistribution area_distribution(std::span<const SrhCategory> categories);
/// Mean of probability vectors. Throws Error(empty_area) for an empty slice.
SrhDistribution area_distribution(std::span<const SrhDistribution> probabilities);

struct FitStatistics {
    /// Missing when the reference is exactly uniform (no variation to explain).
    std::optional<double> r2;
    double mse{0.0};
};

/// Over the five paired proportions: mse is the mean squared difference and
/// r2 = 1 - SS_res / SS_tot with SS_tot taken about the reference mean of 0.2.
FitStatistics r2_and_mse(const SrhDistribution &predicted, const SrhDistribution &reference);

/// Accumulates adults per area and produces AreaResult rows in area order. Areas without adults
/// are skipped with a log message.
class AreaAggregator {
  public:
    explicit AreaAggregator(std::size_t areas);

    void add(AreaIndex area, int age, Education education, const SrhDistribution &outcome);
    void add(AreaIndex area, int age, Education education, SrhCategory outcome);

    std::vector<AreaResult> results(const Geography &geography) const;

  private:
    struct Cell {
        std::size_t adults{0};
        double age{0.0};
        double education{0.0};
        SrhDistribution mass{SrhDistribution::Zero()};
    };
    std::vector<Cell> cells_;
};

struct GeoPoint {
    double lat{0.0};
    double lon{0.0};

    /// Throws Error(invalid_input) outside [-90, 90] x [-180, 180].
    void validate() const;
};

inline constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(const GeoPoint &a, const GeoPoint &b);

struct FacilitySite {
    std::string name;
    GeoPoint location;
};

struct NearestFacility {
    std::size_t index{0};
    double distance_km{0.0};
};

/// Closest facility by great-circle distance; the first listed wins ties.
/// Throws Error(no_facilities) for an empty list.
NearestFacility nearest_facility(const GeoPoint &centroid, std::span<const FacilitySite> facilities);

/// Q1: worse-than-average SRH and farther than average; Q2: worse and nearer; Q3: better and
/// nearer; Q4: better and farther. Values equal to a mean count as the lower/left side.
enum class Quadrant { Q1 = 1, Q2, Q3, Q4 };

std::string_view to_string(Quadrant quadrant) noexcept;

struct QuadrantPoint {
    double mean_srh{0.0};
    double distance_km{0.0};
};

/// Classifies against the unweighted means. Needs at least two areas.
std::vector<Quadrant> quadrant_classify(std::span<const QuadrantPoint> areas);

struct ValidationSummary {
    std::size_t areas{0};
    std::size_t areas_with_r2{0};
    double mean_r2{0.0};
    double mean_mse{0.0};
};

/// Attaches reference distributions and fit statistics to matching areas; areas missing from the
/// reference are left without statistics. Means are unweighted over areas.
ValidationSummary validate_areas(std::vector<AreaResult> &results,
                                 const std::vector<std::pair<std::string, SrhDistribution>> &reference);

struct CaseStudyRow {
    std::string area_id;
    std::string facility;
    double distance_km{0.0};
    double mean_srh{0.0};
    Quadrant quadrant{Quadrant::Q3};
};

std::vector<CaseStudyRow> facility_case_study(const std::vector<AreaResult> &results,
                                              const std::vector<std::pair<std::string, GeoPoint>> &centroids,
                                              std::span<const FacilitySite> facilities);

// Files

/// Columns area_id plus very_good..very_bad; any other column is ignored.
std::vector<std::pair<std::string, SrhDistribution>> read_area_distributions(const std::filesystem::path &path);
/// Reads a results file written by write_area_results.
std::vector<AreaResult> read_area_results(const std::filesystem::path &path);
void write_area_results(const std::filesystem::path &path, const std::vector<AreaResult> &results);
void write_validation_summary(const std::filesystem::path &path, const ValidationSummary &summary);
/// Centroids CSV: area_id, lat, lon.
std::vector<std::pair<std::string, GeoPoint>> read_centroids(const std::filesystem::path &path);
void write_centroids(const std::filesystem::path &path,
                     const std::vector<std::pair<std::string, GeoPoint>> &centroids);
/// Facilities CSV: name, lat, lon.
std::vector<FacilitySite> read_facilities(const std::filesystem::path &path);
void write_facilities(const std::filesystem::path &path, std::span<const FacilitySite> facilities);
void write_case_study(const std::filesystem::path &path, const std::vector<CaseStudyRow> &rows);
/// Point features at the centroids carrying the per-area results as properties.
void write_geojson(const std::filesystem::path &path, const std::vector<AreaResult> &results,
                   const std::vector<std::pair<std::string, GeoPoint>> &centroids);

} // namespace srh
