#pragma once

#include "srh/encoding.hpp"
#include "srh/ordinal.hpp"

#include <filesystem>
#include <vector>

namespace srh {

/// One health-survey respondent: the six encodable characteristics and the SRH answer.
struct SurveyRecord {
    EncodableRecord person;
    SrhCategory srh{SrhCategory::very_good};
    double weight{1.0};
};

struct SurveyData {
    std::vector<SurveyRecord> records;
    /// Rows whose SRH answer was "Don't know" or a refusal.
    std::size_t dropped{0};
};

/// Columns: age, sex, marital_status, economic_status, education, region, srh and an optional
/// weight. Economic status accepts microdata codes or census labels. Non-substantive SRH answers
/// are dropped and counted.
SurveyData read_survey(const std::filesystem::path &path);
void write_survey(const std::filesystem::path &path, const std::vector<SurveyRecord> &records);

TrainingSet make_training_set(const std::vector<SurveyRecord> &records, const EncodingSchema &schema);

} // namespace srh
