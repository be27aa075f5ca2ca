#include "srh/scenario.hpp"

#include "srh/core/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <vector>

namespace srh {

namespace {

constexpr long kStartingNetMigration = 75'000;

struct Anchor {
    int year;
    long level;
};

std::vector<Anchor> anchors_for(MigrationScenario scenario, int anchor_year) {
    switch (scenario) {
    case MigrationScenario::M1:
        return {{anchor_year, kStartingNetMigration}, {2027, 45'000}};
    case MigrationScenario::M2:
        return {{anchor_year, kStartingNetMigration}, {2032, 30'000}};
    case MigrationScenario::M3:
        return {{anchor_year, kStartingNetMigration}, {2027, 25'000}, {2032, 10'000}};
    }
    throw Error{ErrorCode::unknown_scenario, "unknown migration scenario"};
}

} // namespace

std::string_view to_string(MigrationScenario scenario) noexcept {
    switch (scenario) {
    case MigrationScenario::M1:
        return "M1";
    case MigrationScenario::M2:
        return "M2";
    case MigrationScenario::M3:
        return "M3";
    }
    return "?";
}

MigrationScenario parse_migration_scenario(std::string_view text) {
    if (text == "M1") {
        return MigrationScenario::M1;
    }
    if (text == "M2") {
        return MigrationScenario::M2;
    }
    if (text == "M3") {
        return MigrationScenario::M3;
    }
    throw Error{ErrorCode::unknown_scenario, fmt::format("unknown migration scenario '{}'", text)};
}

long net_migration_target(MigrationScenario scenario, int year, int anchor_year) {
    const auto anchors = anchors_for(scenario, anchor_year);
    if (anchor_year >= anchors[1].year) {
        throw Error{ErrorCode::invalid_config,
                    fmt::format("migration anchor year {} must precede {}", anchor_year, anchors[1].year)};
    }
    if (year <= anchors.front().year) {
        return anchors.front().level;
    }
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        const auto &from = anchors[i - 1];
        const auto &to = anchors[i];
        if (year <= to.year) {
            const double fraction = static_cast<double>(year - from.year) / (to.year - from.year);
            return std::lround(static_cast<double>(from.level) +
                               fraction * static_cast<double>(to.level - from.level));
        }
    }
    return anchors.back().level;
}

TfrSchedule::TfrSchedule(std::map<int, double> anchors) : anchors_(std::move(anchors)) {
    if (anchors_.empty()) {
        throw Error{ErrorCode::invalid_config, "TFR schedule needs at least one anchor"};
    }
    for (const auto &[year, tfr] : anchors_) {
        if (!(tfr > 0.0 && tfr < 5.0)) {
            throw Error{ErrorCode::invalid_config, fmt::format("TFR {} for {} outside (0, 5)", tfr, year)};
        }
    }
}

TfrSchedule TfrSchedule::standard() { return TfrSchedule{{{2022, 1.55}, {2038, 1.3}}}; }

double TfrSchedule::at(int year) const {
    if (anchors_.empty()) {
        throw Error{ErrorCode::invalid_config, "empty TFR schedule"};
    }
    auto upper = anchors_.lower_bound(year);
    if (upper == anchors_.end()) {
        return std::prev(upper)->second;
    }
    if (upper->first == year || upper == anchors_.begin()) {
        return upper->second;
    }
    const auto lower = std::prev(upper);
    const double fraction = static_cast<double>(year - lower->first) / (upper->first - lower->first);
    return lower->second + fraction * (upper->second - lower->second);
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string &message) { throw Error{ErrorCode::invalid_config, message}; };
    if (end_year < start_year || end_year > start_year + 50) {
        fail(fmt::format("end year {} must lie within 0..50 years after start year {}", end_year, start_year));
    }
    if (runs < 1) {
        fail("runs must be at least 1");
    }
    if (!(net_migration_scale >= 0.0) || !std::isfinite(net_migration_scale)) {
        fail("net_migration_scale must be a non-negative number");
    }
    if (!(male_birth_probability >= 0.0 && male_birth_probability <= 1.0)) {
        fail("male_birth_probability must lie in [0, 1]");
    }
    if (!(marriage_education_weight >= 0.0)) {
        fail("marriage_education_weight must be non-negative");
    }
    if (min_fertility_age < 10 || max_fertility_age < min_fertility_age || max_fertility_age > 60) {
        fail("invalid fertility age range");
    }
    if (min_marriage_age < 15) {
        fail("min_marriage_age must be at least 15");
    }
    (void)tfr_schedule.at(start_year);
    (void)net_migration_target(migration_scenario, start_year, migration_anchor_year);
}

double ScenarioConfig::fertility_scale(int year) const {
    return tfr_schedule.at(year) / tfr_schedule.at(fertility_base_year);
}

long ScenarioConfig::net_migration(int year) const {
    return std::lround(net_migration_scale *
                       static_cast<double>(net_migration_target(migration_scenario, year, migration_anchor_year)));
}

nlohmann::json ScenarioConfig::to_json() const {
    nlohmann::json tfr = nlohmann::json::object();
    for (const auto &[year, value] : tfr_schedule.anchors()) {
        tfr[std::to_string(year)] = value;
    }
    nlohmann::json paths = nlohmann::json::object();
    for (const auto &[name, path] : rate_table_paths) {
        paths[name] = path.string();
    }
    return {{"migration_scenario", std::string{to_string(migration_scenario)}},
            {"start_year", start_year},
            {"end_year", end_year},
            {"tfr_schedule", tfr},
            {"fertility_base_year", fertility_base_year},
            {"migration_anchor_year", migration_anchor_year},
            {"net_migration_scale", net_migration_scale},
            {"seed", seed},
            {"runs", runs},
            {"male_birth_probability", male_birth_probability},
            {"marriage_education_weight", marriage_education_weight},
            {"min_marriage_age", min_marriage_age},
            {"min_fertility_age", min_fertility_age},
            {"max_fertility_age", max_fertility_age},
            {"rates_dir", rates_dir.string()},
            {"rate_table_paths", paths},
            {"workers", workers}};
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json &doc) {
    try {
        ScenarioConfig config;
        config.migration_scenario =
            parse_migration_scenario(doc.value("migration_scenario", std::string{"M1"}));
        config.start_year = doc.value("start_year", config.start_year);
        config.end_year = doc.value("end_year", config.end_year);
        if (doc.contains("tfr_schedule")) {
            std::map<int, double> anchors;
            for (const auto &[year, value] : doc.at("tfr_schedule").items()) {
                anchors[std::stoi(year)] = value.get<double>();
            }
            config.tfr_schedule = TfrSchedule{anchors};
        }
        config.fertility_base_year = doc.value("fertility_base_year", config.fertility_base_year);
        config.migration_anchor_year = doc.value("migration_anchor_year", config.migration_anchor_year);
        config.net_migration_scale = doc.value("net_migration_scale", config.net_migration_scale);
        config.seed = doc.value("seed", config.seed);
        config.runs = doc.value("runs", config.runs);
        config.male_birth_probability = doc.value("male_birth_probability", config.male_birth_probability);
        config.marriage_education_weight =
            doc.value("marriage_education_weight", config.marriage_education_weight);
        config.min_marriage_age = doc.value("min_marriage_age", config.min_marriage_age);
        config.min_fertility_age = doc.value("min_fertility_age", config.min_fertility_age);
        config.max_fertility_age = doc.value("max_fertility_age", config.max_fertility_age);
        config.rates_dir = doc.value("rates_dir", config.rates_dir.string());
        if (doc.contains("rate_table_paths")) {
            for (const auto &[name, path] : doc.at("rate_table_paths").items()) {
                config.rate_table_paths[name] = path.get<std::string>();
            }
        }
        config.workers = doc.value("workers", config.workers);
        config.validate();
        return config;
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_config, fmt::format("malformed scenario config: {}", e.what())};
    } catch (const std::invalid_argument &e) {
        throw Error{ErrorCode::invalid_config, fmt::format("malformed scenario config: {}", e.what())};
    }
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw Error{ErrorCode::io, fmt::format("cannot open config {}", path.string())};
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_config, fmt::format("{}: {}", path.string(), e.what())};
    }
    auto config = from_json(doc);
    const auto base = path.parent_path();
    if (config.rates_dir.is_relative()) {
        config.rates_dir = base / config.rates_dir;
    }
    for (auto &[name, file] : config.rate_table_paths) {
        if (file.is_relative()) {
            file = base / file;
        }
    }
    return config;
}

void ScenarioConfig::save(const std::filesystem::path &path) const {
    std::ofstream out{path};
    if (!out) {
        throw Error{ErrorCode::io, fmt::format("cannot write config {}", path.string())};
    }
    out << to_json().dump(2) << '\n';
}

} // namespace srh
