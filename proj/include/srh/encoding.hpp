#pragma once

#include "srh/population.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace srh {

using FeatureVector = Eigen::VectorXd;

/// One one-hot block. The reference category gets no column.
struct EncodingBlock {
    std::string name;
    std::vector<std::string> categories;
    std::string reference;
};

/// The six characteristics the regression sees. Citizenship and recent migration are not
/// part of the health microdata and are never encoded.
struct EncodableRecord {
    int age{kAdultAge};
    Sex sex{Sex::F};
    MaritalStatus marital_status{MaritalStatus::MAR};
    EconomicStatus economic_status{EconomicStatus::W};
    Education education{Education::NF};
    Region region{Region::connacht_ulster};
};

/// Block order, category order and reference categories of the feature vector.
///
/// Recognised block names: age_group, sex, marital_status, economic_status, education, region.
/// Each must appear exactly once. Education NA (nothing attained yet) encodes as NF.
class EncodingSchema {
  public:
    EncodingSchema(std::vector<EncodingBlock> blocks, AgeBanding banding);

    /// Reference categories: youngest age group, F, MAR, W, NF, Connacht/Ulster.
    static EncodingSchema standard(const AgeBanding &banding = {});

    static EncodingSchema from_json(const nlohmann::json &doc);
    nlohmann::json to_json() const;
    static EncodingSchema load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;

    const std::vector<EncodingBlock> &blocks() const noexcept { return blocks_; }
    const AgeBanding &banding() const noexcept { return banding_; }
    std::size_t length() const noexcept { return length_; }

    /// "block=category" per column.
    std::vector<std::string> feature_names() const;
    /// Stable hash of the canonical JSON form.
    std::string fingerprint() const;

    /// Throws Error(underage_individual) for age < banding.first or NA status.
    FeatureVector encode(const EncodableRecord &record) const;

  private:
    enum class Slot { age_group, sex, marital_status, economic_status, education, region };

    int column_of(Slot slot, std::size_t value) const;

    std::vector<EncodingBlock> blocks_;
    AgeBanding banding_;
    std::size_t length_{0};
    // Per slot, column index by enum value (or age band); -1 for the reference category.
    std::array<std::vector<int>, 6> columns_;
};

/// Throws Error(unmapped_area) when the individual's area is unknown.
EncodableRecord encodable(const Individual &individual, const Geography &geography);

FeatureVector encode(const Individual &individual, const Geography &geography,
                     const EncodingSchema &schema);

} // namespace srh
