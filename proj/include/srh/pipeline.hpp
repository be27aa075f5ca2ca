#pragma once

#include "srh/core/error.hpp"
#include "srh/ordinal.hpp"
#include "srh/scenario.hpp"
#include "srh/spatial.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srh {

/// Alignment-target scenarios written for every output year.
inline constexpr std::array<std::string_view, 3> kOutputScenarios{"mean", "best", "worst"};

/// @brief Everything one end-to-end run reads.
///
/// Relative paths in the JSON form resolve against the directory of the file they came from.
struct PipelineConfig {
    ScenarioConfig scenario;
    std::filesystem::path scenario_file;
    std::filesystem::path geography;
    std::filesystem::path population;
    std::filesystem::path survey;
    std::filesystem::path census_history;
    std::optional<std::filesystem::path> reference_areas;
    std::optional<std::filesystem::path> centroids;
    std::optional<std::filesystem::path> facilities;
    /// Years at which populations are predicted; empty selects the start and end years.
    std::vector<int> output_years;
    Link link{Link::logit};
    std::size_t forecast_samples{1000};
    std::size_t min_alignment_rows{30};
    /// Areas listed at each end of the report ranking.
    std::size_t report_top{10};

    /// Throws Error(invalid_config).
    void validate() const;
    /// Sorted, de-duplicated output years inside [start_year, end_year].
    std::vector<int> years() const;

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json &doc, const std::filesystem::path &base_dir);
    static PipelineConfig load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;
};

/// Runs `fn`, re-throwing any failure as an Error whose message starts with "[stage] ".
template <typename Fn>
void run_stage(std::string_view stage, Fn &&fn);

/// Simulates every run and writes population snapshots at the output years
/// (work/run<r>/population_<year>.csv), per-run and averaged accounting tables
/// (accounting/run<r>.csv, accounting/accounting_mean.csv) and work/runs.csv, which flags the
/// run whose final national population is the median.
void simulate_stage(const PipelineConfig &config, const std::filesystem::path &out);

/// Fits the ordinal model to the survey: model/model.json, model/coefficients.csv, model/fit.json.
void fit_stage(const PipelineConfig &config, const std::filesystem::path &out);

/// Cohort and national forecasts for output years after the last census year:
/// forecast/forecast_<year>.csv.
void forecast_stage(const PipelineConfig &config, const std::filesystem::path &out);

/// Category probabilities for every person aged 15+ in each snapshot:
/// work/run<r>/predictions_<year>.csv.
void predict_stage(const PipelineConfig &config, const std::filesystem::path &out);

/// Builds alignment tables per output year and scenario (alignment/alignment_<year>_<scenario>.csv)
/// from the observed census (years the census covers) or the forecast, aligns each run's
/// predictions and aggregates them by area: work/run<r>/areas_<year>_<scenario>.csv.
void align_stage(const PipelineConfig &config, const std::filesystem::path &out);

/// Pools each area's aligned results over runs: areas_<year>_<scenario>.csv. The adult count is
/// the mean over runs; proportions, mean age and mean education are adult-weighted.
void aggregate_stage(const PipelineConfig &config, const std::filesystem::path &out);

/// Compares the first output year's mean scenario with the reference areas:
/// validation/validation_<year>.csv and validation/summary.csv. Returns nothing to compare when
/// no reference file is configured.
std::optional<ValidationSummary> validate_stage(const PipelineConfig &config, const std::filesystem::path &out);

/// Distance to the nearest facility against mean SRH for the last output year's mean scenario:
/// casestudy/casestudy_<year>.csv and casestudy/areas_<year>.geojson. Skipped without
/// centroids and facilities.
void casestudy_stage(const PipelineConfig &config, const std::filesystem::path &out);

struct NationalRow {
    int year{};
    std::string scenario;
    double adults{0.0};
    SrhDistribution proportions{SrhDistribution::Zero()};
};

struct RankedArea {
    std::string area_id;
    double first{0.0};
    double last{0.0};
    double change{0.0};
};

struct Report {
    std::vector<NationalRow> national;
    /// Per scenario, areas by mean-SRH change from the first to the last output year, most
    /// improved (largest decrease) first; ties by area id.
    std::map<std::string, std::vector<RankedArea>> rankings;
};

/// Reads every areas_<year>_<scenario>.csv in `out`. National proportions are the adult-weighted
/// aggregate of the area rows. Throws Error(missing_outputs) when there are none.
Report build_report(const std::filesystem::path &out);
/// Writes report/national.csv, report/ranking_<scenario>.csv and report/summary.md.
Report report_stage(const std::filesystem::path &out, std::size_t top = 10);

/// Hashes of the inputs, the settings and every file under `out` except manifest.json itself.
void write_manifest(const PipelineConfig &config, const std::filesystem::path &out);

/// Writes pipeline.json next to a synthetic bundle, referring to its files by relative name.
void write_bundle_pipeline_config(const std::filesystem::path &bundle_dir);

/// All stages in order, each error tagged with its stage.
void run_pipeline(const PipelineConfig &config, const std::filesystem::path &out);

// ---------------------------------------------------------------------------------------------

template <typename Fn>
void run_stage(std::string_view stage, Fn &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        throw Error{e.code(), std::string{"["} + std::string{stage} + "] " + e.message()};
    } catch (const std::exception &e) {
        throw Error{ErrorCode::io, std::string{"["} + std::string{stage} + "] " + e.what()};
    }
}

} // namespace srh
