#include "srh/encoding.hpp"
#include "srh/core/hash.hpp"

#include <fmt/format.h>

#include <fstream>

namespace srh {

namespace {

constexpr std::array<std::string_view, 6> kBlockNames{
    "age_group", "sex", "marital_status", "economic_status", "education", "region"};

template <typename E>
std::vector<std::string> codes_of(std::initializer_list<E> values) {
    std::vector<std::string> out;
    for (auto v : values) {
        out.emplace_back(code(v));
    }
    return out;
}

template <typename E>
std::size_t value_index(const std::string &category, std::string_view block) {
    auto value = try_parse_category<E>(category);
    if (!value) {
        throw Error{ErrorCode::unknown_category,
                    fmt::format("block '{}' has unknown category '{}'", block, category)};
    }
    return static_cast<std::size_t>(*value);
}

} // namespace

EncodingSchema::EncodingSchema(std::vector<EncodingBlock> blocks, AgeBanding banding)
    : blocks_{std::move(blocks)}, banding_{banding} {
    banding_.validate();
    std::array<bool, 6> seen{};
    int next_column = 0;
    for (const auto &block : blocks_) {
        auto name_it = std::find(kBlockNames.begin(), kBlockNames.end(), block.name);
        if (name_it == kBlockNames.end()) {
            throw Error{ErrorCode::invalid_config, fmt::format("unknown block '{}'", block.name)};
        }
        const auto slot = static_cast<std::size_t>(name_it - kBlockNames.begin());
        if (seen[slot]) {
            throw Error{ErrorCode::invalid_config, fmt::format("block '{}' repeated", block.name)};
        }
        seen[slot] = true;
        if (std::find(block.categories.begin(), block.categories.end(), block.reference) ==
            block.categories.end()) {
            throw Error{ErrorCode::invalid_config,
                        fmt::format("reference '{}' not among '{}' categories", block.reference,
                                    block.name)};
        }

        std::size_t domain = 0;
        switch (static_cast<Slot>(slot)) {
        case Slot::age_group: domain = static_cast<std::size_t>(banding_.band_count()); break;
        case Slot::sex: domain = category_count<Sex>; break;
        case Slot::marital_status: domain = category_count<MaritalStatus>; break;
        case Slot::economic_status: domain = category_count<EconomicStatus>; break;
        case Slot::education: domain = category_count<Education>; break;
        case Slot::region: domain = category_count<Region>; break;
        }
        auto &columns = columns_[slot];
        columns.assign(domain, -2); // -2: not representable

        for (const auto &category : block.categories) {
            std::size_t value = 0;
            switch (static_cast<Slot>(slot)) {
            case Slot::age_group: {
                auto lower = banding_.parse_label(category);
                if (!lower) {
                    throw Error{ErrorCode::unknown_category,
                                fmt::format("age group '{}' does not match the banding", category)};
                }
                value = static_cast<std::size_t>(banding_.band_index(*lower));
                break;
            }
            case Slot::sex: value = value_index<Sex>(category, block.name); break;
            case Slot::marital_status:
                value = value_index<MaritalStatus>(category, block.name);
                break;
            case Slot::economic_status:
                value = value_index<EconomicStatus>(category, block.name);
                break;
            case Slot::education: value = value_index<Education>(category, block.name); break;
            case Slot::region: value = value_index<Region>(category, block.name); break;
            }
            if (columns[value] != -2) {
                throw Error{ErrorCode::invalid_config,
                            fmt::format("category '{}' repeated in '{}'", category, block.name)};
            }
            columns[value] = category == block.reference ? -1 : next_column++;
        }
    }
    for (std::size_t slot = 0; slot < seen.size(); ++slot) {
        if (!seen[slot]) {
            throw Error{ErrorCode::invalid_config,
                        fmt::format("schema is missing block '{}'", kBlockNames[slot])};
        }
    }
    length_ = static_cast<std::size_t>(next_column);
}

EncodingSchema EncodingSchema::standard(const AgeBanding &banding) {
    banding.validate();
    EncodingBlock age{"age_group", {}, banding.label(0)};
    for (int band = 0; band < banding.band_count(); ++band) {
        age.categories.push_back(banding.label(band));
    }
    using E = Education;
    using S = EconomicStatus;
    std::vector<EncodingBlock> blocks{
        age,
        {"sex", codes_of({Sex::F, Sex::M}), "F"},
        {"marital_status",
         codes_of({MaritalStatus::MAR, MaritalStatus::SGL, MaritalStatus::SEP, MaritalStatus::WID}),
         "MAR"},
        {"economic_status", codes_of({S::W, S::S, S::LAHF, S::R, S::UTWSD, S::OTH, S::UNE}), "W"},
        {"education",
         codes_of({E::NF, E::P, E::LS, E::US, E::PLC, E::HC, E::DEG, E::PD, E::D}), "NF"},
        {"region",
         codes_of({Region::connacht_ulster, Region::munster, Region::dublin,
                   Region::leinster_rest}),
         std::string{code(Region::connacht_ulster)}},
    };
    return EncodingSchema{std::move(blocks), banding};
}

nlohmann::json EncodingSchema::to_json() const {
    nlohmann::json doc;
    doc["age_banding"] = {{"first", banding_.first}, {"width", banding_.width}, {"top", banding_.top}};
    auto &blocks = doc["blocks"] = nlohmann::json::array();
    for (const auto &block : blocks_) {
        blocks.push_back(
            {{"name", block.name}, {"categories", block.categories}, {"reference", block.reference}});
    }
    return doc;
}

EncodingSchema EncodingSchema::from_json(const nlohmann::json &doc) {
    try {
        AgeBanding banding;
        if (doc.contains("age_banding")) {
            const auto &b = doc.at("age_banding");
            banding = AgeBanding{b.at("first").get<int>(), b.at("width").get<int>(),
                                 b.at("top").get<int>()};
        }
        std::vector<EncodingBlock> blocks;
        for (const auto &block : doc.at("blocks")) {
            blocks.push_back(EncodingBlock{block.at("name").get<std::string>(),
                                           block.at("categories").get<std::vector<std::string>>(),
                                           block.at("reference").get<std::string>()});
        }
        return EncodingSchema{std::move(blocks), banding};
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_config, fmt::format("encoding schema: {}", e.what())};
    }
}

EncodingSchema EncodingSchema::load(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw Error{ErrorCode::io, fmt::format("cannot open '{}'", path.string())};
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_config, fmt::format("{}: {}", path.string(), e.what())};
    }
    return from_json(doc);
}

void EncodingSchema::save(const std::filesystem::path &path) const {
    std::ofstream out{path, std::ios::trunc};
    if (!out) {
        throw Error{ErrorCode::io, fmt::format("cannot write '{}'", path.string())};
    }
    out << to_json().dump(2) << '\n';
}

std::vector<std::string> EncodingSchema::feature_names() const {
    std::vector<std::string> names;
    names.reserve(length_);
    for (const auto &block : blocks_) {
        for (const auto &category : block.categories) {
            if (category != block.reference) {
                names.push_back(block.name + "=" + category);
            }
        }
    }
    return names;
}

std::string EncodingSchema::fingerprint() const { return sha256_hex(to_json().dump()); }

int EncodingSchema::column_of(Slot slot, std::size_t value) const {
    const auto column = columns_[static_cast<std::size_t>(slot)].at(value);
    if (column == -2) {
        throw Error{ErrorCode::unknown_category,
                    fmt::format("value {} is not a category of block '{}'", value,
                                kBlockNames[static_cast<std::size_t>(slot)])};
    }
    return column;
}

FeatureVector EncodingSchema::encode(const EncodableRecord &record) const {
    if (record.age < banding_.first) {
        throw Error{ErrorCode::underage_individual,
                    fmt::format("cannot encode age {} (< {})", record.age, banding_.first)};
    }
    if (record.economic_status == EconomicStatus::NA) {
        throw Error{ErrorCode::underage_individual, "cannot encode economic status NA"};
    }
    const auto education =
        record.education == Education::NA ? Education::NF : record.education;
    const std::array<std::pair<Slot, std::size_t>, 6> values{{
        {Slot::age_group, static_cast<std::size_t>(banding_.band_index(record.age))},
        {Slot::sex, static_cast<std::size_t>(record.sex)},
        {Slot::marital_status, static_cast<std::size_t>(record.marital_status)},
        {Slot::economic_status, static_cast<std::size_t>(record.economic_status)},
        {Slot::education, static_cast<std::size_t>(education)},
        {Slot::region, static_cast<std::size_t>(record.region)},
    }};
    FeatureVector x = FeatureVector::Zero(static_cast<Eigen::Index>(length_));
    for (const auto &[slot, value] : values) {
        if (const auto column = column_of(slot, value); column >= 0) {
            x(column) = 1.0;
        }
    }
    return x;
}

EncodableRecord encodable(const Individual &individual, const Geography &geography) {
    if (individual.area >= geography.size()) {
        throw Error{ErrorCode::unmapped_area,
                    fmt::format("individual {} has area index {} outside the geography",
                                individual.id, individual.area)};
    }
    return EncodableRecord{individual.age,           individual.sex,
                           individual.marital_status, individual.economic_status,
                           individual.education,     geography.region_of(individual.area)};
}

FeatureVector encode(const Individual &individual, const Geography &geography,
                     const EncodingSchema &schema) {
    return schema.encode(encodable(individual, geography));
}

} // namespace srh
