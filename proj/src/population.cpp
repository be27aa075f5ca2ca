#include "srh/population.hpp"
#include "srh/core/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace srh {

bool is_valid_distribution(const SrhDistribution &dist, double tolerance) {
    if (!dist.allFinite() || (dist.array() < 0.0).any()) {
        return false;
    }
    return std::abs(dist.sum() - 1.0) <= tolerance;
}

void require_distribution(const SrhDistribution &dist, std::string_view context) {
    if (!is_valid_distribution(dist)) {
        throw Error{ErrorCode::invalid_distribution,
                    fmt::format("{}[{}] (sum {})", context.empty() ? "" : fmt::format("{}: ", context),
                                fmt::join(dist.data(), dist.data() + dist.size(), ", "),
                                dist.sum())};
    }
}

double mean_srh(const SrhDistribution &dist) {
    require_distribution(dist, "mean_srh");
    return dist.dot(SrhDistribution::LinSpaced(0.0, kSrhCategories - 1.0));
}

SrhDistribution degenerate_distribution(SrhCategory category) {
    SrhDistribution out = SrhDistribution::Zero();
    out(static_cast<int>(category)) = 1.0;
    return out;
}

// ---------------------------------------------------------------------------------------------

Geography::Geography(std::vector<Area> areas) : areas_{std::move(areas)} {
    county_of_.reserve(areas_.size());
    nuts3_of_.reserve(areas_.size());
    for (std::size_t i = 0; i < areas_.size(); ++i) {
        const auto &area = areas_[i];
        if (!by_id_.emplace(area.id, static_cast<AreaIndex>(i)).second) {
            throw Error{ErrorCode::invalid_input, fmt::format("duplicate area id '{}'", area.id)};
        }
        auto county = county_index(area.county);
        if (!county) {
            counties_.push_back(area.county);
            county_areas_.emplace_back();
            county = counties_.size() - 1;
        }
        county_of_.push_back(*county);
        county_areas_[*county].push_back(static_cast<AreaIndex>(i));

        auto nuts3 = nuts3_index(area.nuts3);
        if (!nuts3) {
            nuts3_.push_back(area.nuts3);
            nuts3 = nuts3_.size() - 1;
        }
        nuts3_of_.push_back(*nuts3);
    }
}

Geography Geography::from_csv(const std::filesystem::path &path) {
    const auto table = read_csv(path);
    const auto id = table.column("area_id");
    const auto county = table.column("county");
    const auto nuts3 = table.column("nuts3");
    const auto region = table.column("region");
    std::vector<Area> areas;
    areas.reserve(table.rows.size());
    for (const auto &row : table.rows) {
        auto parsed = try_parse_category<Region>(row[region]);
        if (!parsed) {
            throw Error{ErrorCode::unmapped_area,
                        fmt::format("area '{}' has unknown region '{}'", row[id], row[region])};
        }
        areas.push_back(Area{row[id], row[county], row[nuts3], *parsed});
    }
    return Geography{std::move(areas)};
}

void Geography::write_csv(const std::filesystem::path &path) const {
    CsvWriter out{path, {"area_id", "county", "nuts3", "region"}};
    for (const auto &area : areas_) {
        out.write_row({area.id, area.county, area.nuts3, std::string{code(area.region)}});
    }
    out.close();
}

std::optional<AreaIndex> Geography::find(std::string_view id) const {
    auto it = by_id_.find(std::string{id});
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

AreaIndex Geography::index_of(std::string_view id) const {
    if (auto index = find(id)) {
        return *index;
    }
    throw Error{ErrorCode::unmapped_area, fmt::format("area '{}' is not in the geography", id)};
}

std::optional<std::size_t> Geography::county_index(std::string_view county) const {
    auto it = std::find(counties_.begin(), counties_.end(), county);
    if (it == counties_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - counties_.begin());
}

std::optional<std::size_t> Geography::nuts3_index(std::string_view nuts3) const {
    auto it = std::find(nuts3_.begin(), nuts3_.end(), nuts3);
    if (it == nuts3_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - nuts3_.begin());
}

// ---------------------------------------------------------------------------------------------

void AgeBanding::validate() const {
    if (first < 0 || width <= 0 || top < first || (top - first) % width != 0 || top > kMaxAge) {
        throw Error{ErrorCode::invalid_config,
                    fmt::format("invalid age banding first={} width={} top={}", first, width, top)};
    }
}

int AgeBanding::band_index(int age) const {
    if (age < first) {
        throw Error{ErrorCode::underage_individual,
                    fmt::format("age {} is below the first band ({})", age, first)};
    }
    if (age >= top) {
        return band_count() - 1;
    }
    return (age - first) / width;
}

std::string AgeBanding::label(int band) const {
    const int lower = lower_bound(band);
    if (lower >= top) {
        return fmt::format("{}+", lower);
    }
    return fmt::format("{}-{}", lower, lower + width - 1);
}

std::optional<int> AgeBanding::parse_label(std::string_view text) const {
    int lower = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), lower);
    if (ec != std::errc{}) {
        return std::nullopt;
    }
    if (lower < first || lower > top || (lower - first) % width != 0) {
        return std::nullopt;
    }
    const auto band = (lower - first) / width;
    if (label(band) != text) {
        return std::nullopt;
    }
    return lower;
}

CohortKey cohort_of(int age, Sex sex, EconomicStatus status, const AgeBanding &banding) {
    if (age < banding.first) {
        throw Error{ErrorCode::underage_individual,
                    fmt::format("age {} is below the cohort threshold {}", age, banding.first)};
    }
    if (status == EconomicStatus::NA) {
        throw Error{ErrorCode::underage_individual,
                    fmt::format("economic status NA at age {} has no cohort", age)};
    }
    return CohortKey{banding.band_lower(age), sex, status};
}

CohortKey cohort_of(const Individual &individual, const AgeBanding &banding) {
    return cohort_of(individual.age, individual.sex, individual.economic_status, banding);
}

std::vector<CohortKey> all_cohorts(const AgeBanding &banding) {
    std::vector<CohortKey> out;
    for (int band = 0; band < banding.band_count(); ++band) {
        for (auto sex : all_categories<Sex>()) {
            for (auto status : kAdultStatuses) {
                out.push_back(CohortKey{banding.lower_bound(band), sex, status});
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

EconomicStatus map_economic_status(std::string_view label) {
    struct Entry {
        std::string_view label;
        EconomicStatus status;
    };
    static constexpr std::array<Entry, 19> table{{
        // Census (historical) labels.
        {"Unemployed looking for first regular job", EconomicStatus::UNE},
        {"Unemployed having lost or given up previous job", EconomicStatus::UNE},
        {"Student or pupil", EconomicStatus::S},
        {"Looking after home/family", EconomicStatus::LAHF},
        {"Retired", EconomicStatus::R},
        {"Unable to work due to permanent sickness or disability", EconomicStatus::UTWSD},
        {"Employer or own account worker", EconomicStatus::W},
        {"Employee", EconomicStatus::W},
        {"Assisting relative", EconomicStatus::W},
        {"Other", EconomicStatus::OTH},
        // Microdata labels.
        {"Working", EconomicStatus::W},
        {"Unemployed", EconomicStatus::UNE},
        {"At work", EconomicStatus::W},
        {"Student", EconomicStatus::S},
        {"Looking after home or family", EconomicStatus::LAHF},
        {"Unable to work due to sickness or disability", EconomicStatus::UTWSD},
        {"Looking After Home/Family", EconomicStatus::LAHF},
        {"At Work", EconomicStatus::W},
        {"Unable to Work Due to Permanent Sickness or Disability", EconomicStatus::UTWSD},
    }};
    for (const auto &entry : table) {
        if (entry.label == label) {
            return entry.status;
        }
    }
    if (auto status = try_parse_category<EconomicStatus>(label);
        status && *status != EconomicStatus::NA) {
        return *status;
    }
    throw Error{ErrorCode::unknown_status_label,
                fmt::format("no microdata status for label '{}'", label)};
}

} // namespace srh
