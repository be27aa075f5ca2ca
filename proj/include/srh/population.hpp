#pragma once

#include "srh/core/error.hpp"

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace srh {

inline constexpr int kMaxAge = 105;
inline constexpr int kSrhCategories = 5;
inline constexpr int kAdultAge = 15;

enum class Sex : std::uint8_t { F, M };
enum class MaritalStatus : std::uint8_t { MAR, SGL, SEP, WID };
enum class Citizenship : std::uint8_t { IE, UK, EU, RW };
/// Ordered from no attainment (children) to doctorate.
enum class Education : std::uint8_t { NA, NF, P, LS, US, PLC, HC, DEG, PD, D };
enum class EconomicStatus : std::uint8_t { NA, W, S, LAHF, R, UTWSD, OTH, UNE };
/// Regions reported by the health survey microdata.
enum class Region : std::uint8_t { connacht_ulster, munster, dublin, leinster_rest };
/// Ordinal self-rated health: Very Good = 0 ... Very Bad = 4.
enum class SrhCategory : std::uint8_t { very_good, good, fair, bad, very_bad };

template <typename E>
struct CategoryCodes;

template <>
struct CategoryCodes<Sex> {
    static constexpr std::string_view name = "sex";
    static constexpr std::array<std::string_view, 2> codes{"F", "M"};
};
template <>
struct CategoryCodes<MaritalStatus> {
    static constexpr std::string_view name = "marital_status";
    static constexpr std::array<std::string_view, 4> codes{"MAR", "SGL", "SEP", "WID"};
};
template <>
struct CategoryCodes<Citizenship> {
    static constexpr std::string_view name = "citizenship";
    static constexpr std::array<std::string_view, 4> codes{"IE", "UK", "EU", "RW"};
};
template <>
struct CategoryCodes<Education> {
    static constexpr std::string_view name = "education";
    static constexpr std::array<std::string_view, 10> codes{"NA",  "NF", "P",   "LS", "US",
                                                            "PLC", "HC", "DEG", "PD", "D"};
};
template <>
struct CategoryCodes<EconomicStatus> {
    static constexpr std::string_view name = "economic_status";
    static constexpr std::array<std::string_view, 8> codes{"NA", "W",     "S",   "LAHF",
                                                           "R",  "UTWSD", "OTH", "UNE"};
};
template <>
struct CategoryCodes<Region> {
    static constexpr std::string_view name = "region";
    static constexpr std::array<std::string_view, 4> codes{"Connacht/Ulster", "Munster", "Dublin",
                                                           "Leinster Rest"};
};
template <>
struct CategoryCodes<SrhCategory> {
    static constexpr std::string_view name = "srh";
    static constexpr std::array<std::string_view, 5> codes{"Very Good", "Good", "Fair", "Bad",
                                                           "Very Bad"};
};

template <typename E>
inline constexpr std::size_t category_count = CategoryCodes<E>::codes.size();

template <typename E>
constexpr std::string_view code(E value) {
    return CategoryCodes<E>::codes[static_cast<std::size_t>(value)];
}

template <typename E>
std::optional<E> try_parse_category(std::string_view text) {
    const auto &codes = CategoryCodes<E>::codes;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] == text) {
            return static_cast<E>(i);
        }
    }
    return std::nullopt;
}

/// Throws Error(unknown_category) for codes outside the characteristic's value set.
template <typename E>
E parse_category(std::string_view text) {
    if (auto value = try_parse_category<E>(text)) {
        return *value;
    }
    throw Error{ErrorCode::unknown_category, std::string{CategoryCodes<E>::name} + " code '" +
                                                 std::string{text} + "'"};
}

template <typename E>
constexpr auto all_categories() {
    std::array<E, category_count<E>> out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<E>(i);
    }
    return out;
}

/// Microdata statuses eligible for cohorts (children's NA excluded).
inline constexpr std::array<EconomicStatus, 7> kAdultStatuses{
    EconomicStatus::W, EconomicStatus::S,   EconomicStatus::LAHF, EconomicStatus::R,
    EconomicStatus::UTWSD, EconomicStatus::OTH, EconomicStatus::UNE};

/// Education on the 0-8 scale: NF = 0 ... D = 8. Unattained (NA) counts as 0.
inline int education_scale(Education e) {
    return e == Education::NA ? 0 : static_cast<int>(e) - 1;
}

// ---------------------------------------------------------------------------------------------
// Compositions

template <typename Scalar>
using Composition = Eigen::Matrix<Scalar, kSrhCategories, 1>;
using SrhDistribution = Composition<double>;

bool is_valid_distribution(const SrhDistribution &dist, double tolerance = 1e-9);

/// Throws Error(invalid_distribution) unless every entry is >= 0 and they sum to 1.
void require_distribution(const SrhDistribution &dist, std::string_view context = {});

/// Expected ordinal code of the distribution, in [0, 4].
double mean_srh(const SrhDistribution &dist);

SrhDistribution degenerate_distribution(SrhCategory category);

/// CSV column names for the five proportions of an SrhDistribution.
inline constexpr std::array<std::string_view, kSrhCategories> kSrhColumns{
    "very_good", "good", "fair", "bad", "very_bad"};

// ---------------------------------------------------------------------------------------------
// Individuals and geography

using PersonId = std::int64_t;
using AreaIndex = std::uint32_t;

struct Individual {
    PersonId id{};
    int age{};
    Sex sex{Sex::F};
    MaritalStatus marital_status{MaritalStatus::SGL};
    Citizenship citizenship{Citizenship::IE};
    bool moved_last_year{false};
    Education education{Education::NA};
    EconomicStatus economic_status{EconomicStatus::NA};
    AreaIndex area{};
    std::optional<PersonId> spouse_id;
    std::optional<int> graduation_year;

    // Simulation-only state; not part of the population file.
    std::optional<Education> studying;
    std::optional<Education> lifetime_target;
    std::optional<Education> parent_education;

    bool operator==(const Individual &) const = default;
};

struct Area {
    std::string id;
    std::string county;
    std::string nuts3;
    Region region{Region::connacht_ulster};
};

/// Small-area registry: area -> county -> NUTS3 region -> survey region.
class Geography {
  public:
    Geography() = default;
    explicit Geography(std::vector<Area> areas);

    static Geography from_csv(const std::filesystem::path &path);
    void write_csv(const std::filesystem::path &path) const;

    std::size_t size() const noexcept { return areas_.size(); }
    const Area &area(AreaIndex index) const { return areas_.at(index); }
    const std::vector<Area> &areas() const noexcept { return areas_; }

    std::optional<AreaIndex> find(std::string_view id) const;
    /// Throws Error(unmapped_area).
    AreaIndex index_of(std::string_view id) const;
    Region region_of(AreaIndex index) const { return areas_.at(index).region; }

    std::size_t county_of(AreaIndex index) const { return county_of_.at(index); }
    std::size_t nuts3_of(AreaIndex index) const { return nuts3_of_.at(index); }
    const std::vector<std::string> &counties() const noexcept { return counties_; }
    const std::vector<std::string> &nuts3_regions() const noexcept { return nuts3_; }
    const std::vector<AreaIndex> &areas_in_county(std::size_t county) const {
        return county_areas_.at(county);
    }
    std::optional<std::size_t> county_index(std::string_view county) const;
    std::optional<std::size_t> nuts3_index(std::string_view nuts3) const;

  private:
    std::vector<Area> areas_;
    std::unordered_map<std::string, AreaIndex> by_id_;
    std::vector<std::string> counties_;
    std::vector<std::string> nuts3_;
    std::vector<std::size_t> county_of_;
    std::vector<std::size_t> nuts3_of_;
    std::vector<std::vector<AreaIndex>> county_areas_;
};

// ---------------------------------------------------------------------------------------------
// Cohorts

/// Five-year age bands from `first` with an open-ended band starting at `top`.
struct AgeBanding {
    int first = kAdultAge;
    int width = 5;
    int top = 85;

    void validate() const;
    int band_count() const { return (top - first) / width + 1; }
    /// Band index of an age at or above `first`.
    int band_index(int age) const;
    int lower_bound(int band) const { return first + band * width; }
    int band_lower(int age) const { return lower_bound(band_index(age)); }
    std::string label(int band) const;
    std::string label_for_age(int age) const { return label(band_index(age)); }
    /// Lower bound for a label such as "15-19" or "85+".
    std::optional<int> parse_label(std::string_view label) const;
};

struct CohortKey {
    int age_group{kAdultAge}; ///< lower bound of the age band
    Sex sex{Sex::F};
    EconomicStatus economic_status{EconomicStatus::W};

    auto operator<=>(const CohortKey &) const = default;
};

struct CohortKeyHash {
    std::size_t operator()(const CohortKey &key) const noexcept {
        return std::hash<int>{}(key.age_group * 64 + static_cast<int>(key.sex) * 16 +
                                static_cast<int>(key.economic_status));
    }
};

/// Throws Error(underage_individual) for age below the banding start or a NA status.
CohortKey cohort_of(int age, Sex sex, EconomicStatus status, const AgeBanding &banding = {});
CohortKey cohort_of(const Individual &individual, const AgeBanding &banding = {});

/// Every cohort of the banding, sorted.
std::vector<CohortKey> all_cohorts(const AgeBanding &banding = {});

/// Maps a census (historical) economic-status label to the microdata status.
/// Microdata labels and the short codes are accepted as well.
EconomicStatus map_economic_status(std::string_view historical_label);

} // namespace srh
