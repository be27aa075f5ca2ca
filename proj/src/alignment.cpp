#include "srh/alignment.hpp"

#include "srh/compositional.hpp"
#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace srh {

namespace {

struct Tally {
    SrhDistribution mass{SrhDistribution::Zero()};
    std::size_t rows{0};

    void add(SrhCategory category, double weight) {
        mass(static_cast<int>(category)) += weight;
        ++rows;
    }
    bool usable(std::size_t min_rows) const {
        return rows >= min_rows && (mass.array() > 0.0).all();
    }
};

struct Weighted {
    SrhDistribution sum{SrhDistribution::Zero()};
    double weight{0.0};

    void add(const SrhDistribution &d, double w) {
        sum += w * d;
        weight += w;
    }
    std::optional<SrhDistribution> mean() const {
        if (weight <= 0.0) {
            return std::nullopt;
        }
        return closure(sum);
    }
};

std::vector<std::string> key_fields(const std::optional<CohortKey> &key, bool with_status,
                                    const AgeBanding &banding) {
    if (!key) {
        return {"*", "*", "*"};
    }
    return {banding.label_for_age(key->age_group), std::string{code(key->sex)},
            with_status ? std::string{code(key->economic_status)} : "*"};
}

void append_entry(std::vector<std::string> &row, const AlignmentEntry &entry) {
    for (int k = 0; k < kSrhCategories; ++k) {
        row.push_back(format_real(entry.census(k)));
    }
    for (int k = 0; k < kSrhCategories; ++k) {
        row.push_back(format_real(entry.micro(k)));
    }
}

} // namespace

SrhDistribution align(const SrhDistribution &prediction, const SrhDistribution &census,
                      const SrhDistribution &micro) {
    require_distribution(prediction, "prediction");
    require_distribution(census, "census distribution");
    require_distribution(micro, "microdata distribution");
    SrhDistribution floored = micro;
    int zeros = 0;
    for (int k = 0; k < kSrhCategories; ++k) {
        if (micro(k) <= 0.0) {
            floored(k) = kCompositionFloor;
            zeros += prediction(k) > 0.0 ? 1 : 0;
        }
    }
    if (zeros > 0) {
        spdlog::warn("ZeroMicroProportion: {} microdata proportions were zero and floored at {}",
                     zeros, kCompositionFloor);
    }
    const SrhDistribution adjusted = (census.array() / floored.array() * prediction.array()).matrix();
    const double total = adjusted.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw Error{ErrorCode::invalid_distribution,
                    "aligned prediction has no mass; the census puts zero weight on every predicted category"};
    }
    return adjusted / total;
}

void AlignmentTable::set_cohort(const CohortKey &key, const AlignmentEntry &entry) {
    require_distribution(entry.census, "census distribution");
    require_distribution(entry.micro, "microdata distribution");
    cohorts_[key] = entry;
}

void AlignmentTable::set_age_sex(int age_group, Sex sex, const AlignmentEntry &entry) {
    require_distribution(entry.census, "census distribution");
    require_distribution(entry.micro, "microdata distribution");
    age_sex_[{age_group, sex}] = entry;
}

void AlignmentTable::set_national(const AlignmentEntry &entry) {
    require_distribution(entry.census, "census distribution");
    require_distribution(entry.micro, "microdata distribution");
    national_ = entry;
}

AlignmentTable::Match AlignmentTable::lookup(const CohortKey &key) const {
    if (auto it = cohorts_.find(key); it != cohorts_.end()) {
        return {&it->second, AlignmentLevel::cohort};
    }
    if (auto it = age_sex_.find({key.age_group, key.sex}); it != age_sex_.end()) {
        return {&it->second, AlignmentLevel::age_sex};
    }
    if (national_) {
        return {&*national_, AlignmentLevel::national};
    }
    throw Error{ErrorCode::no_fallback,
                fmt::format("no alignment entry for cohort ({}, {}, {}) and no national fallback",
                            banding_.label_for_age(key.age_group), code(key.sex),
                            code(key.economic_status))};
}

AlignmentTable AlignmentTable::read_csv(const std::filesystem::path &path, const AgeBanding &banding) {
    const auto csv = srh::read_csv(path);
    const auto c_age = csv.column("age_group");
    const auto c_sex = csv.column("sex");
    const auto c_status = csv.column("economic_status");
    std::array<std::size_t, kSrhCategories> c_census{};
    std::array<std::size_t, kSrhCategories> c_micro{};
    for (int k = 0; k < kSrhCategories; ++k) {
        c_census[static_cast<std::size_t>(k)] = csv.column(fmt::format("census_{}", k));
        c_micro[static_cast<std::size_t>(k)] = csv.column(fmt::format("micro_{}", k));
    }

    AlignmentTable table{banding};
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto &row = csv.rows[i];
        const auto where = fmt::format("{} row {}", path.string(), i + 1);
        AlignmentEntry entry;
        for (int k = 0; k < kSrhCategories; ++k) {
            entry.census(k) = parse_real(row[c_census[static_cast<std::size_t>(k)]], where);
            entry.micro(k) = parse_real(row[c_micro[static_cast<std::size_t>(k)]], where);
        }
        if (row[c_age] == "*") {
            table.set_national(entry);
            continue;
        }
        const auto age = banding.parse_label(row[c_age]);
        if (!age) {
            throw Error{ErrorCode::invalid_input, fmt::format("{}: unknown age group '{}'", where, row[c_age])};
        }
        const auto sex = parse_category<Sex>(row[c_sex]);
        if (row[c_status] == "*") {
            table.set_age_sex(*age, sex, entry);
        } else {
            table.set_cohort({*age, sex, map_economic_status(row[c_status])}, entry);
        }
    }
    return table;
}

void AlignmentTable::write_csv(const std::filesystem::path &path) const {
    std::vector<std::string> header{"age_group", "sex", "economic_status"};
    for (int k = 0; k < kSrhCategories; ++k) {
        header.push_back(fmt::format("census_{}", k));
    }
    for (int k = 0; k < kSrhCategories; ++k) {
        header.push_back(fmt::format("micro_{}", k));
    }
    CsvWriter out{path, header};
    for (const auto &[key, entry] : cohorts_) {
        auto row = key_fields(key, true, banding_);
        append_entry(row, entry);
        out.write_row(row);
    }
    for (const auto &[age_sex, entry] : age_sex_) {
        auto row = key_fields(CohortKey{age_sex.first, age_sex.second, EconomicStatus::W}, false, banding_);
        append_entry(row, entry);
        out.write_row(row);
    }
    if (national_) {
        auto row = key_fields(std::nullopt, false, banding_);
        append_entry(row, *national_);
        out.write_row(row);
    }
    out.close();
}

AlignmentTable build_alignment_table(const std::map<CohortKey, SrhDistribution> &census,
                                     const std::map<CohortKey, double> &population,
                                     const std::optional<SrhDistribution> &national_census,
                                     const std::vector<SurveyRecord> &survey,
                                     const AgeBanding &banding,
                                     const AlignmentBuildOptions &options) {
    std::map<CohortKey, Tally> micro_cohort;
    std::map<std::pair<int, Sex>, Tally> micro_age_sex;
    Tally micro_national;
    for (const auto &record : survey) {
        const auto &p = record.person;
        if (p.age < banding.first || p.economic_status == EconomicStatus::NA) {
            continue;
        }
        const auto key = cohort_of(p.age, p.sex, p.economic_status, banding);
        micro_cohort[key].add(record.srh, record.weight);
        micro_age_sex[{key.age_group, key.sex}].add(record.srh, record.weight);
        micro_national.add(record.srh, record.weight);
    }

    std::map<std::pair<int, Sex>, Weighted> census_age_sex;
    Weighted census_national;
    for (const auto &[key, dist] : census) {
        require_distribution(dist, "census distribution");
        const auto it = population.find(key);
        const double weight = it == population.end() ? 1.0 : it->second;
        census_age_sex[{key.age_group, key.sex}].add(dist, weight);
        census_national.add(dist, weight);
    }

    AlignmentTable table{banding};
    for (const auto &[key, dist] : census) {
        const auto it = micro_cohort.find(key);
        if (it != micro_cohort.end() && it->second.usable(options.min_rows)) {
            table.set_cohort(key, {dist, closure(it->second.mass)});
        }
    }
    for (const auto &[age_sex, weighted] : census_age_sex) {
        const auto it = micro_age_sex.find(age_sex);
        if (it != micro_age_sex.end() && it->second.usable(options.min_rows)) {
            table.set_age_sex(age_sex.first, age_sex.second, {*weighted.mean(), closure(it->second.mass)});
        }
    }
    const auto national = national_census ? national_census : census_national.mean();
    if (national && micro_national.rows > 0) {
        // The national microdata cell is kept even when sparse; align() floors any empty part.
        table.set_national({*national, closure(micro_national.mass)});
    }
    return table;
}

std::vector<SrhDistribution> align_population(std::span<const SrhDistribution> predictions,
                                              std::span<const CohortKey> cohorts,
                                              const AlignmentTable &table) {
    if (predictions.size() != cohorts.size()) {
        throw Error{ErrorCode::invalid_input, "predictions and cohorts differ in length"};
    }
    std::vector<SrhDistribution> out;
    out.reserve(predictions.size());
    std::size_t age_sex = 0;
    std::size_t national = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto match = table.lookup(cohorts[i]);
        age_sex += match.level == AlignmentLevel::age_sex ? 1 : 0;
        national += match.level == AlignmentLevel::national ? 1 : 0;
        out.push_back(align(predictions[i], match.entry->census, match.entry->micro));
    }
    if (age_sex + national > 0) {
        spdlog::info("alignment fallbacks: {} individuals by age group and sex, {} national",
                     age_sex, national);
    }
    return out;
}

} // namespace srh
