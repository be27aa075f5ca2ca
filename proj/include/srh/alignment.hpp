#pragma once

#include "srh/population.hpp"
#include "srh/survey.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace srh {

/// (census_k / micro_k) * prediction_k, re-closed. Zero microdata parts are floored at 1e-6 with
/// a warning. Throws Error(invalid_distribution) when an input is not a distribution or the
/// adjusted vector has no mass.
SrhDistribution align(const SrhDistribution &prediction, const SrhDistribution &census,
                      const SrhDistribution &micro);

struct AlignmentEntry {
    SrhDistribution census;
    SrhDistribution micro;
};

enum class AlignmentLevel { cohort, age_sex, national };

/// @brief Census and microdata distributions per cohort, with coarser fallbacks.
///
/// Lookup order: exact cohort, then (age group, sex), then the national entry.
class AlignmentTable {
  public:
    explicit AlignmentTable(AgeBanding banding = {}) : banding_(banding) {}

    void set_cohort(const CohortKey &key, const AlignmentEntry &entry);
    void set_age_sex(int age_group, Sex sex, const AlignmentEntry &entry);
    void set_national(const AlignmentEntry &entry);

    struct Match {
        const AlignmentEntry *entry;
        AlignmentLevel level;
    };
    /// Throws Error(no_fallback) when no level covers the key.
    Match lookup(const CohortKey &key) const;

    const AgeBanding &banding() const noexcept { return banding_; }
    std::size_t cohort_entries() const noexcept { return cohorts_.size(); }
    std::size_t age_sex_entries() const noexcept { return age_sex_.size(); }
    bool has_national() const noexcept { return national_.has_value(); }

    /// Columns age_group, sex, economic_status, census_0..4, micro_0..4. "*" marks the coarser
    /// levels: status "*" for (age group, sex) rows and all three "*" for the national row.
    static AlignmentTable read_csv(const std::filesystem::path &path, const AgeBanding &banding = {});
    void write_csv(const std::filesystem::path &path) const;

  private:
    AgeBanding banding_;
    std::map<CohortKey, AlignmentEntry> cohorts_;
    std::map<std::pair<int, Sex>, AlignmentEntry> age_sex_;
    std::optional<AlignmentEntry> national_;
};

struct AlignmentBuildOptions {
    /// Survey rows a cell needs before its own microdata distribution is trusted.
    std::size_t min_rows{30};
};

/// Builds the table from cohort census distributions (with optional population weights for the
/// coarser aggregates) and survey microdata. A level is only populated when its microdata cell
/// has enough rows and no empty category; otherwise lookups fall through to the next level.
AlignmentTable build_alignment_table(const std::map<CohortKey, SrhDistribution> &census,
                                     const std::map<CohortKey, double> &population,
                                     const std::optional<SrhDistribution> &national_census,
                                     const std::vector<SurveyRecord> &survey,
                                     const AgeBanding &banding = {},
                                     const AlignmentBuildOptions &options = {});

/// Aligns each prediction with its cohort's entry. Fallback use is logged once per call.
std::vector<SrhDistribution> align_population(std::span<const SrhDistribution> predictions,
                                              std::span<const CohortKey> cohorts,
                                              const AlignmentTable &table);

} // namespace srh
