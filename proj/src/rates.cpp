#include "srh/rates.hpp"

#include "srh/core/error.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace srh {

namespace {

using Member = RateTable RateSet::*;

struct Registered {
    RateSpec spec;
    Member member;
};

const std::vector<Registered> &registry() {
    static const std::vector<Registered> tables{
        {{"mortality", {"age", "sex", "year"}, RateKind::probability}, &RateSet::mortality},
        {{"internal_flows", {"from_county", "to_county"}, RateKind::count}, &RateSet::internal_flows},
        {{"internal_profile", {"age", "sex"}, RateKind::weight}, &RateSet::internal_profile},
        {{"emigration_rate", {"nuts3"}, RateKind::probability}, &RateSet::emigration_rate},
        {{"emigration_profile", {"age", "sex"}, RateKind::weight}, &RateSet::emigration_profile},
        {{"immigration_profile", {"age", "sex", "citizenship"}, RateKind::weight}, &RateSet::immigration_profile},
        {{"immigration_destination", {"area_id"}, RateKind::weight}, &RateSet::immigration_destination},
        {{"fertility", {"age", "nuts3", "marital_status"}, RateKind::probability}, &RateSet::fertility},
        {{"marriage", {"nuts3"}, RateKind::probability}, &RateSet::marriage},
        {{"separation", {}, RateKind::probability}, &RateSet::separation},
        {{"dropout", {"level"}, RateKind::probability}, &RateSet::dropout},
        {{"completion_time", {"level"}, RateKind::count}, &RateSet::completion_time},
        {{"parental_transmission", {"parent_education", "target"}, RateKind::probability},
         &RateSet::parental_transmission},
        {{"returner_rate", {"nuts3"}, RateKind::probability}, &RateSet::returner_rate},
        {{"returner_profile", {"age", "sex"}, RateKind::weight}, &RateSet::returner_profile},
        {{"post_exit", {"level", "status"}, RateKind::probability}, &RateSet::post_exit},
        {{"employment", {"age_group", "sex", "citizenship", "education", "from", "to"}, RateKind::probability},
         &RateSet::employment},
    };
    return tables;
}

const Registered &registered(std::string_view name) {
    for (const auto &r : registry()) {
        if (r.spec.name == name) {
            return r;
        }
    }
    throw Error{ErrorCode::missing_table, fmt::format("unknown rate table '{}'", name)};
}

} // namespace

RateSet::RateSet() {
    for (const auto &r : registry()) {
        this->*r.member = RateTable{std::string{r.spec.name}, r.spec.dimensions, r.spec.kind};
    }
}

const std::vector<RateSpec> &RateSet::specs() {
    static const std::vector<RateSpec> out = [] {
        std::vector<RateSpec> specs;
        for (const auto &r : registry()) {
            specs.push_back(r.spec);
        }
        return specs;
    }();
    return out;
}

RateTable &RateSet::table(std::string_view name) { return this->*registered(name).member; }

const RateTable &RateSet::table(std::string_view name) const { return this->*registered(name).member; }

RateSet RateSet::load(const std::filesystem::path &dir,
                      const std::map<std::string, std::filesystem::path> &overrides) {
    for (const auto &[name, path] : overrides) {
        (void)registered(name);
    }
    RateSet rates;
    for (const auto &r : registry()) {
        const std::string name{r.spec.name};
        const auto it = overrides.find(name);
        const auto path = it != overrides.end() ? it->second : dir / (name + ".csv");
        if (!std::filesystem::exists(path)) {
            throw Error{ErrorCode::missing_table,
                        fmt::format("rate table '{}' not found at {}", name, path.string())};
        }
        auto table = RateTable::read_csv(path, name, r.spec.kind);
        if (table.dimensions() != r.spec.dimensions) {
            throw Error{ErrorCode::invalid_input,
                        fmt::format("{}: expected key columns ({}) but found ({})", path.string(),
                                    fmt::join(r.spec.dimensions, ", "), fmt::join(table.dimensions(), ", "))};
        }
        rates.*r.member = std::move(table);
    }
    return rates;
}

void RateSet::save(const std::filesystem::path &dir) const {
    std::filesystem::create_directories(dir);
    for (const auto &r : registry()) {
        (this->*r.member).write_csv(dir / (std::string{r.spec.name} + ".csv"));
    }
}

} // namespace srh
