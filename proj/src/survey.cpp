#include "srh/survey.hpp"

#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cctype>

namespace srh {

namespace {

bool is_non_response(std::string_view label) {
    std::string lower;
    for (char c : label) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    static constexpr std::array<std::string_view, 7> kNonResponses{
        "", "don't know", "dont know", "refused", "refusal", "not stated", "na"};
    return std::find(kNonResponses.begin(), kNonResponses.end(), lower) != kNonResponses.end();
}

int parse_age(const std::string &text, std::size_t row) {
    try {
        std::size_t used = 0;
        const int age = std::stoi(text, &used);
        if (used == text.size() && age >= 0 && age <= kMaxAge) {
            return age;
        }
    } catch (const std::exception &) {
    }
    throw Error{ErrorCode::invalid_input, fmt::format("survey row {}: invalid age '{}'", row, text)};
}

} // namespace

SurveyData read_survey(const std::filesystem::path &path) {
    const auto table = read_csv(path);
    const auto c_age = table.column("age");
    const auto c_sex = table.column("sex");
    const auto c_marital = table.column("marital_status");
    const auto c_status = table.column("economic_status");
    const auto c_education = table.column("education");
    const auto c_region = table.column("region");
    const auto c_srh = table.column("srh");
    const bool weighted = table.has_column("weight");
    const auto c_weight = weighted ? table.column("weight") : 0;

    SurveyData data;
    data.records.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto &row = table.rows[i];
        if (is_non_response(row[c_srh])) {
            ++data.dropped;
            continue;
        }
        SurveyRecord record;
        record.person.age = parse_age(row[c_age], i + 1);
        record.person.sex = parse_category<Sex>(row[c_sex]);
        record.person.marital_status = parse_category<MaritalStatus>(row[c_marital]);
        record.person.economic_status = map_economic_status(row[c_status]);
        record.person.education = parse_category<Education>(row[c_education]);
        record.person.region = parse_category<Region>(row[c_region]);
        record.srh = parse_category<SrhCategory>(row[c_srh]);
        if (weighted) {
            record.weight = parse_real(row[c_weight], "survey weight");
        }
        data.records.push_back(record);
    }
    if (data.dropped > 0) {
        spdlog::info("dropped {} survey rows with a non-substantive SRH answer", data.dropped);
    }
    return data;
}

void write_survey(const std::filesystem::path &path, const std::vector<SurveyRecord> &records) {
    CsvWriter out{path, {"age", "sex", "marital_status", "economic_status", "education", "region",
                         "srh", "weight"}};
    for (const auto &r : records) {
        out.write_row({std::to_string(r.person.age), std::string{code(r.person.sex)},
                       std::string{code(r.person.marital_status)},
                       std::string{code(r.person.economic_status)},
                       std::string{code(r.person.education)}, std::string{code(r.person.region)},
                       std::string{code(r.srh)}, format_real(r.weight)});
    }
    out.close();
}

TrainingSet make_training_set(const std::vector<SurveyRecord> &records, const EncodingSchema &schema) {
    TrainingSet set{schema.length()};
    set.reserve(records.size());
    for (const auto &r : records) {
        set.add(schema.encode(r.person), r.srh, r.weight);
    }
    return set;
}

} // namespace srh
