#include "srh/pipeline.hpp"

#include "srh/alignment.hpp"
#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"
#include "srh/core/hash.hpp"
#include "srh/core/parallel.hpp"
#include "srh/encoding.hpp"
#include "srh/forecast.hpp"
#include "srh/microsim.hpp"
#include "srh/population_io.hpp"
#include "srh/rates.hpp"
#include "srh/survey.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>

namespace srh {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path &base, const std::string &value) {
    fs::path path{value};
    return path.is_relative() ? base / path : path;
}

fs::path run_dir(const fs::path &out, int run) { return out / "work" / fmt::format("run{}", run); }

fs::path population_snapshot(const fs::path &out, int run, int year) {
    return run_dir(out, run) / fmt::format("population_{}.csv", year);
}

fs::path predictions_file(const fs::path &out, int run, int year) {
    return run_dir(out, run) / fmt::format("predictions_{}.csv", year);
}

std::string areas_name(int year, std::string_view scenario) { return fmt::format("areas_{}_{}.csv", year, scenario); }

fs::path forecast_file(const fs::path &out, int year) {
    return out / "forecast" / fmt::format("forecast_{}.csv", year);
}

void require_file(const fs::path &path, std::string_view what) {
    if (!fs::is_regular_file(path)) {
        throw Error{ErrorCode::missing_outputs, fmt::format("{} {} does not exist", what, path.string())};
    }
}

Geography load_geography(const PipelineConfig &config) { return Geography::from_csv(config.geography); }

CensusHistory load_census(const PipelineConfig &config) { return read_census_history(config.census_history); }

/// A year is observed when the national census series covers it; other years come from the
/// forecast.
bool observed_year(const CompositionHistory &national, int year) { return national.contains(year); }

std::vector<int> forecast_years(const PipelineConfig &config, const CompositionHistory &national) {
    std::vector<int> out;
    for (int year : config.years()) {
        if (!observed_year(national, year)) {
            out.push_back(year);
        }
    }
    return out;
}

struct Task {
    int run;
    int year;
};

std::vector<Task> run_year_tasks(const PipelineConfig &config) {
    std::vector<Task> tasks;
    for (int run = 0; run < config.scenario.runs; ++run) {
        for (int year : config.years()) {
            tasks.push_back({run, year});
        }
    }
    return tasks;
}

nlohmann::json settings_json(const PipelineConfig &config) {
    auto scenario = config.scenario.to_json();
    scenario.erase("rates_dir");
    scenario.erase("rate_table_paths");
    scenario.erase("workers");
    return {
        {"scenario", scenario},
        {"output_years", config.years()},
        {"link", std::string{to_string(config.link)}},
        {"forecast_samples", config.forecast_samples},
        {"min_alignment_rows", config.min_alignment_rows},
        {"report_top", config.report_top},
    };
}

std::vector<fs::path> files_under(const fs::path &dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) {
        return files;
    }
    for (const auto &entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(), [&](const fs::path &a, const fs::path &b) {
        return fs::relative(a, dir).generic_string() < fs::relative(b, dir).generic_string();
    });
    return files;
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw Error{ErrorCode::io, fmt::format("cannot write {}", path.string())};
    }
    out << text;
}

// Predictions file: one row per person aged 15+ with the fields alignment and aggregation need.
const std::vector<std::string> kPredictionHeader = [] {
    std::vector<std::string> header{"id", "area_id", "age", "sex", "education", "economic_status"};
    header.insert(header.end(), kSrhColumns.begin(), kSrhColumns.end());
    return header;
}();

struct Prediction {
    AreaIndex area{};
    int age{};
    Sex sex{Sex::F};
    Education education{Education::NA};
    EconomicStatus status{EconomicStatus::W};
    SrhDistribution probabilities;
};

std::vector<Prediction> read_predictions(const fs::path &path, const Geography &geography) {
    const auto table = read_csv(path);
    std::vector<std::size_t> cols;
    for (const auto &name : kPredictionHeader) {
        cols.push_back(table.column(name));
    }
    std::vector<Prediction> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto &row = table.rows[i];
        const auto where = fmt::format("{} row {}", path.string(), i + 1);
        Prediction p;
        p.area = geography.index_of(row[cols[1]]);
        p.age = parse_int(row[cols[2]], where);
        p.sex = parse_category<Sex>(row[cols[3]]);
        p.education = parse_category<Education>(row[cols[4]]);
        p.status = parse_category<EconomicStatus>(row[cols[5]]);
        for (int k = 0; k < kSrhCategories; ++k) {
            p.probabilities(k) = parse_real(row[cols[6 + static_cast<std::size_t>(k)]], where);
        }
        p.probabilities = closure(p.probabilities);
        out.push_back(p);
    }
    return out;
}

struct AlignmentTargets {
    std::map<CohortKey, SrhDistribution> cohorts;
    std::map<CohortKey, double> population;
    std::optional<SrhDistribution> national;
};

AlignmentTargets targets_for(const CensusHistory &census, const fs::path &out, int year,
                             std::string_view scenario) {
    AlignmentTargets targets;
    const auto national = census.national_series();
    const int latest = national.empty() ? year : national.rbegin()->first;
    if (observed_year(national, year)) {
        for (const auto &[key, series] : census.cohorts) {
            if (const auto it = series.find(year); it != series.end()) {
                targets.cohorts.emplace(key, it->second);
                targets.population.emplace(key, census.population_of(key, year));
            }
        }
        targets.national = national.at(year);
        return targets;
    }
    const auto path = forecast_file(out, year);
    require_file(path, "forecast");
    targets.cohorts = read_forecast_scenario(path, scenario, &targets.national);
    for (const auto &[key, dist] : targets.cohorts) {
        targets.population.emplace(key, census.population_of(key, latest));
    }
    return targets;
}

} // namespace

// ---------------------------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
    scenario.validate();
    auto fail = [](const std::string &message) { throw Error{ErrorCode::invalid_config, message}; };
    for (int year : output_years) {
        if (year < scenario.start_year || year > scenario.end_year) {
            fail(fmt::format("output year {} lies outside {}..{}", year, scenario.start_year, scenario.end_year));
        }
    }
    if (forecast_samples < kMinScenarioSamples) {
        fail(fmt::format("forecast_samples must be at least {}", kMinScenarioSamples));
    }
    for (const auto &[name, path] : std::initializer_list<std::pair<std::string_view, const fs::path *>>{
             {"geography", &geography},
             {"population", &population},
             {"survey", &survey},
             {"census_history", &census_history}}) {
        if (path->empty()) {
            fail(fmt::format("pipeline input '{}' is not set", name));
        }
    }
}

std::vector<int> PipelineConfig::years() const {
    std::set<int> years{output_years.begin(), output_years.end()};
    if (years.empty()) {
        years = {scenario.start_year, scenario.end_year};
    }
    return {years.begin(), years.end()};
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json doc{
        {"scenario", scenario_file.string()},
        {"geography", geography.string()},
        {"population", population.string()},
        {"survey", survey.string()},
        {"census_history", census_history.string()},
        {"output_years", output_years},
        {"link", std::string{srh::to_string(link)}},
        {"forecast_samples", forecast_samples},
        {"min_alignment_rows", min_alignment_rows},
        {"report_top", report_top},
    };
    if (reference_areas) {
        doc["reference_areas"] = reference_areas->string();
    }
    if (centroids) {
        doc["centroids"] = centroids->string();
    }
    if (facilities) {
        doc["facilities"] = facilities->string();
    }
    return doc;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json &doc, const fs::path &base_dir) {
    try {
        PipelineConfig config;
        config.scenario_file = resolve(base_dir, doc.at("scenario").get<std::string>());
        config.scenario = ScenarioConfig::load(config.scenario_file);
        config.geography = resolve(base_dir, doc.at("geography").get<std::string>());
        config.population = resolve(base_dir, doc.at("population").get<std::string>());
        config.survey = resolve(base_dir, doc.at("survey").get<std::string>());
        config.census_history = resolve(base_dir, doc.at("census_history").get<std::string>());
        for (auto [key, target] : {std::pair{"reference_areas", &config.reference_areas},
                                   std::pair{"centroids", &config.centroids},
                                   std::pair{"facilities", &config.facilities}}) {
            if (doc.contains(key) && !doc.at(key).is_null()) {
                *target = resolve(base_dir, doc.at(key).get<std::string>());
            }
        }
        if (doc.contains("output_years")) {
            const auto &years = doc.at("output_years");
            config.output_years = years.is_string() ? parse_year_range(years.get<std::string>())
                                                    : years.get<std::vector<int>>();
        }
        config.link = parse_link(doc.value("link", std::string{"logit"}));
        config.forecast_samples = doc.value("forecast_samples", config.forecast_samples);
        config.min_alignment_rows = doc.value("min_alignment_rows", config.min_alignment_rows);
        config.report_top = doc.value("report_top", config.report_top);
        return config;
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_config, fmt::format("pipeline config: {}", e.what())};
    }
}

PipelineConfig PipelineConfig::load(const fs::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw Error{ErrorCode::io, fmt::format("cannot open pipeline config {}", path.string())};
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_config, fmt::format("{}: {}", path.string(), e.what())};
    }
    return from_json(doc, path.parent_path());
}

void PipelineConfig::save(const fs::path &path) const { write_text(path, to_json().dump(2) + "\n"); }

// ---------------------------------------------------------------------------------------------
// Stages

void simulate_stage(const PipelineConfig &config, const fs::path &out) {
    const auto geography = load_geography(config);
    const auto base = read_population(config.population, geography);
    const auto rates = RateSet::load(config.scenario.rates_dir, config.scenario.rate_table_paths);
    const auto years = config.years();
    const auto runs = static_cast<std::size_t>(config.scenario.runs);

    fs::create_directories(out / "accounting");
    std::vector<std::vector<YearAccount>> accounts(runs);
    std::vector<double> final_population(runs, 0.0);
    parallel_for(runs, config.scenario.workers, [&](std::size_t r) {
        const int run = static_cast<int>(r);
        fs::create_directories(run_dir(out, run));
        const Simulation simulation{config.scenario, geography, rates, run};
        auto state = simulation.initialize(base);
        accounts[r] = simulation.run(state, [&](const PopulationState &snapshot) {
            if (std::binary_search(years.begin(), years.end(), snapshot.year)) {
                write_population(population_snapshot(out, run, snapshot.year), snapshot.people, geography);
            }
        });
        final_population[r] = static_cast<double>(state.people.size());
        write_accounts(out / "accounting" / fmt::format("run{}.csv", run), accounts[r], geography);
    });
    write_accounts(out / "accounting" / "accounting_mean.csv", average_accounts(accounts), geography);

    std::vector<std::size_t> order(runs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return final_population[a] < final_population[b]; });
    const auto median = order[(runs - 1) / 2];
    CsvWriter table{out / "work" / "runs.csv", {"run", "population_end", "median"}};
    for (std::size_t r = 0; r < runs; ++r) {
        table.write_row({std::to_string(r), format_real(final_population[r]), r == median ? "1" : "0"});
    }
    table.close();
}

void fit_stage(const PipelineConfig &config, const fs::path &out) {
    const auto survey = read_survey(config.survey);
    const auto schema = EncodingSchema::standard();
    const auto data = make_training_set(survey.records, schema);
    auto result = fit(data, config.link);
    result.model.schema_fingerprint = schema.fingerprint();

    fs::create_directories(out / "model");
    result.model.save(out / "model" / "model.json");
    schema.save(out / "model" / "encoding.json");
    write_summary(out / "model" / "coefficients.csv", summarize(result.model, schema.feature_names()));
    const nlohmann::json info{
        {"rows", data.size()},
        {"dropped_rows", survey.dropped},
        {"iterations", result.iterations},
        {"gradient_norm", result.gradient_norm},
        {"log_likelihood", result.log_likelihood},
    };
    write_text(out / "model" / "fit.json", info.dump(2) + "\n");
}

void forecast_stage(const PipelineConfig &config, const fs::path &out) {
    const auto census = load_census(config);
    const auto national_history = census.national_series();
    const auto years = forecast_years(config, national_history);
    if (years.empty()) {
        return;
    }
    ForecastOptions options;
    options.samples = config.forecast_samples;
    const auto cohorts = forecast_cohorts(census.cohorts, years, options, config.scenario.seed, config.scenario.workers);
    const auto national = forecast_national(national_history, years, options, config.scenario.seed);

    fs::create_directories(out / "forecast");
    for (std::size_t i = 0; i < years.size(); ++i) {
        std::map<CohortKey, std::vector<ScenarioBundle>> slice;
        for (const auto &[key, bundles] : cohorts) {
            slice.emplace(key, std::vector<ScenarioBundle>{bundles.at(i)});
        }
        const std::vector<ScenarioBundle> national_slice{national.at(i)};
        write_forecast_year(forecast_file(out, years[i]), years[i], slice, &national_slice);
    }
}

void predict_stage(const PipelineConfig &config, const fs::path &out) {
    const auto geography = load_geography(config);
    const auto model = OrdinalModel::load(out / "model" / "model.json");
    const auto schema = EncodingSchema::standard();
    if (model.beta.size() != static_cast<Eigen::Index>(schema.length())) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("model has {} coefficients but the encoding has {} columns", model.beta.size(),
                                schema.length())};
    }
    const auto tasks = run_year_tasks(config);
    parallel_for(tasks.size(), config.scenario.workers, [&](std::size_t i) {
        const auto [run, year] = tasks[i];
        const auto snapshot = population_snapshot(out, run, year);
        require_file(snapshot, "population snapshot");
        const auto people = read_population(snapshot, geography);
        CsvWriter writer{predictions_file(out, run, year), kPredictionHeader};
        for (const auto &person : people) {
            if (person.age < schema.banding().first || person.economic_status == EconomicStatus::NA) {
                continue;
            }
            const auto probabilities = predict_proba(model, encode(person, geography, schema));
            std::vector<std::string> row{std::to_string(person.id),
                                         geography.area(person.area).id,
                                         std::to_string(person.age),
                                         std::string{code(person.sex)},
                                         std::string{code(person.education)},
                                         std::string{code(person.economic_status)}};
            for (int k = 0; k < kSrhCategories; ++k) {
                row.push_back(format_real(probabilities(k)));
            }
            writer.write_row(row);
        }
        writer.close();
    });
}

void align_stage(const PipelineConfig &config, const fs::path &out) {
    const auto geography = load_geography(config);
    const auto census = load_census(config);
    const auto survey = read_survey(config.survey);
    const AgeBanding banding;
    const auto years = config.years();

    fs::create_directories(out / "alignment");
    std::map<std::pair<int, std::string_view>, AlignmentTable> tables;
    for (int year : years) {
        for (auto scenario : kOutputScenarios) {
            const auto targets = targets_for(census, out, year, scenario);
            AlignmentBuildOptions options;
            options.min_rows = config.min_alignment_rows;
            auto table = build_alignment_table(targets.cohorts, targets.population, targets.national,
                                               survey.records, banding, options);
            table.write_csv(out / "alignment" / fmt::format("alignment_{}_{}.csv", year, scenario));
            tables.emplace(std::pair{year, scenario}, std::move(table));
        }
    }

    const auto tasks = run_year_tasks(config);
    parallel_for(tasks.size(), config.scenario.workers, [&](std::size_t i) {
        const auto [run, year] = tasks[i];
        const auto path = predictions_file(out, run, year);
        require_file(path, "predictions");
        const auto predictions = read_predictions(path, geography);
        std::vector<SrhDistribution> probabilities;
        std::vector<CohortKey> cohorts;
        probabilities.reserve(predictions.size());
        cohorts.reserve(predictions.size());
        for (const auto &p : predictions) {
            probabilities.push_back(p.probabilities);
            cohorts.push_back(cohort_of(p.age, p.sex, p.status, banding));
        }
        for (auto scenario : kOutputScenarios) {
            const auto aligned = align_population(probabilities, cohorts, tables.at({year, scenario}));
            AreaAggregator aggregator{geography.size()};
            for (std::size_t j = 0; j < predictions.size(); ++j) {
                aggregator.add(predictions[j].area, predictions[j].age, predictions[j].education, aligned[j]);
            }
            write_area_results(run_dir(out, run) / areas_name(year, scenario), aggregator.results(geography));
        }
    });
}

void aggregate_stage(const PipelineConfig &config, const fs::path &out) {
    const auto geography = load_geography(config);
    const auto runs = config.scenario.runs;
    struct Pool {
        double adults{0.0};
        double age{0.0};
        double education{0.0};
        SrhDistribution mass{SrhDistribution::Zero()};
    };
    for (int year : config.years()) {
        for (auto scenario : kOutputScenarios) {
            std::vector<Pool> pools(geography.size());
            for (int run = 0; run < runs; ++run) {
                const auto path = run_dir(out, run) / areas_name(year, scenario);
                require_file(path, "aligned area results");
                for (const auto &r : read_area_results(path)) {
                    auto &pool = pools[geography.index_of(r.area_id)];
                    pool.adults += r.adults;
                    pool.age += r.adults * r.mean_age;
                    pool.education += r.adults * r.mean_education;
                    pool.mass += r.adults * r.predicted;
                }
            }
            std::vector<AreaResult> results;
            for (AreaIndex a = 0; a < geography.size(); ++a) {
                const auto &pool = pools[a];
                if (pool.adults <= 0.0) {
                    continue;
                }
                AreaResult r;
                r.area_id = geography.area(a).id;
                r.adults = pool.adults / runs;
                r.predicted = closure(pool.mass);
                r.mean_srh = mean_srh(r.predicted);
                r.mean_age = pool.age / pool.adults;
                r.mean_education = pool.education / pool.adults;
                results.push_back(std::move(r));
            }
            write_area_results(out / areas_name(year, scenario), results);
        }
    }
}

std::optional<ValidationSummary> validate_stage(const PipelineConfig &config, const fs::path &out) {
    if (!config.reference_areas) {
        spdlog::info("no reference areas configured; validation skipped");
        return std::nullopt;
    }
    const int year = config.years().front();
    const auto path = out / areas_name(year, "mean");
    require_file(path, "area results");
    auto results = read_area_results(path);
    const auto summary = validate_areas(results, read_area_distributions(*config.reference_areas));
    fs::create_directories(out / "validation");
    write_area_results(out / "validation" / fmt::format("validation_{}.csv", year), results);
    write_validation_summary(out / "validation" / "summary.csv", summary);
    spdlog::info("validation {}: {} areas, mean R2 {:.4f}, mean MSE {:.5f}", year, summary.areas, summary.mean_r2,
                 summary.mean_mse);
    return summary;
}

void casestudy_stage(const PipelineConfig &config, const fs::path &out) {
    if (!config.centroids || !config.facilities) {
        spdlog::info("no centroids or facilities configured; case study skipped");
        return;
    }
    const int year = config.years().back();
    const auto path = out / areas_name(year, "mean");
    require_file(path, "area results");
    const auto results = read_area_results(path);
    const auto centroids = read_centroids(*config.centroids);
    const auto facilities = read_facilities(*config.facilities);
    fs::create_directories(out / "casestudy");
    write_case_study(out / "casestudy" / fmt::format("casestudy_{}.csv", year),
                     facility_case_study(results, centroids, facilities));
    write_geojson(out / "casestudy" / fmt::format("areas_{}.geojson", year), results, centroids);
}

// ---------------------------------------------------------------------------------------------
// Report

Report build_report(const fs::path &out) {
    static const std::regex pattern{R"(areas_(\d{4})_([a-z]+)\.csv)"};
    std::map<std::string, std::map<int, std::vector<AreaResult>>> by_scenario;
    if (fs::is_directory(out)) {
        for (const auto &entry : fs::directory_iterator(out)) {
            std::smatch match;
            const auto name = entry.path().filename().string();
            if (entry.is_regular_file() && std::regex_match(name, match, pattern)) {
                by_scenario[match[2]][std::stoi(match[1])] = read_area_results(entry.path());
            }
        }
    }
    if (by_scenario.empty()) {
        throw Error{ErrorCode::missing_outputs, fmt::format("no areas_<year>_<scenario>.csv files in {}", out.string())};
    }

    Report report;
    for (const auto &[scenario, years] : by_scenario) {
        for (const auto &[year, areas] : years) {
            NationalRow row{year, scenario, 0.0, SrhDistribution::Zero()};
            for (const auto &area : areas) {
                row.adults += area.adults;
                row.proportions += area.adults * area.predicted;
            }
            if (row.adults > 0.0) {
                row.proportions /= row.adults;
            }
            report.national.push_back(row);
        }

        const auto &first = years.begin()->second;
        const auto &last = years.rbegin()->second;
        std::map<std::string, double> first_mean;
        for (const auto &area : first) {
            first_mean.emplace(area.area_id, area.mean_srh);
        }
        auto &ranking = report.rankings[scenario];
        for (const auto &area : last) {
            if (const auto it = first_mean.find(area.area_id); it != first_mean.end()) {
                ranking.push_back({area.area_id, it->second, area.mean_srh, area.mean_srh - it->second});
            }
        }
        std::sort(ranking.begin(), ranking.end(), [](const RankedArea &a, const RankedArea &b) {
            return a.change != b.change ? a.change < b.change : a.area_id < b.area_id;
        });
    }
    std::sort(report.national.begin(), report.national.end(), [](const NationalRow &a, const NationalRow &b) {
        return a.year != b.year ? a.year < b.year : a.scenario < b.scenario;
    });
    return report;
}

Report report_stage(const fs::path &out, std::size_t top) {
    auto report = build_report(out);
    fs::create_directories(out / "report");

    std::vector<std::string> header{"year", "scenario", "adults"};
    header.insert(header.end(), kSrhColumns.begin(), kSrhColumns.end());
    header.push_back("mean_srh");
    CsvWriter national{out / "report" / "national.csv", header};
    for (const auto &row : report.national) {
        std::vector<std::string> fields{std::to_string(row.year), row.scenario, format_real(row.adults)};
        for (int k = 0; k < kSrhCategories; ++k) {
            fields.push_back(format_real(row.proportions(k)));
        }
        fields.push_back(row.adults > 0.0 ? format_real(mean_srh(closure(row.proportions))) : "");
        national.write_row(fields);
    }
    national.close();

    std::string summary = "# SRH projection summary\n";
    for (const auto &[scenario, ranking] : report.rankings) {
        CsvWriter writer{out / "report" / fmt::format("ranking_{}.csv", scenario),
                         {"rank", "area_id", "mean_srh_first", "mean_srh_last", "change"}};
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            const auto &r = ranking[i];
            writer.write_row({std::to_string(i + 1), r.area_id, format_real(r.first), format_real(r.last),
                              format_real(r.change)});
        }
        writer.close();

        summary += fmt::format("\n## Scenario: {}\n\n| year | adults | mean SRH |\n|---|---|---|\n", scenario);
        for (const auto &row : report.national) {
            if (row.scenario == scenario && row.adults > 0.0) {
                summary += fmt::format("| {} | {:.1f} | {:.4f} |\n", row.year, row.adults,
                                       mean_srh(closure(row.proportions)));
            }
        }
        const auto n = std::min(top, ranking.size());
        summary += "\nLargest improvements (mean SRH decrease):\n\n";
        for (std::size_t i = 0; i < n; ++i) {
            summary += fmt::format("- {} {:+.4f}\n", ranking[i].area_id, ranking[i].change);
        }
        summary += "\nLargest deteriorations (mean SRH increase):\n\n";
        for (std::size_t i = 0; i < n; ++i) {
            const auto &r = ranking[ranking.size() - 1 - i];
            summary += fmt::format("- {} {:+.4f}\n", r.area_id, r.change);
        }
    }
    write_text(out / "report" / "summary.md", summary);
    return report;
}

// ---------------------------------------------------------------------------------------------
// Manifest and the full run

void write_manifest(const PipelineConfig &config, const fs::path &out) {
    nlohmann::json inputs;
    auto add_input = [&](const std::string &name, const fs::path &path) {
        inputs[name] = {{"file", path.filename().string()}, {"sha256", sha256_file(path)}};
    };
    add_input("scenario", config.scenario_file);
    add_input("geography", config.geography);
    add_input("population", config.population);
    add_input("survey", config.survey);
    add_input("census_history", config.census_history);
    if (config.reference_areas) {
        add_input("reference_areas", *config.reference_areas);
    }
    if (config.centroids) {
        add_input("centroids", *config.centroids);
    }
    if (config.facilities) {
        add_input("facilities", *config.facilities);
    }
    for (const auto &file : files_under(config.scenario.rates_dir)) {
        add_input("rates/" + fs::relative(file, config.scenario.rates_dir).generic_string(), file);
    }
    for (const auto &[table, file] : config.scenario.rate_table_paths) {
        add_input("rate_override/" + table, file);
    }

    nlohmann::json outputs = nlohmann::json::object();
    for (const auto &file : files_under(out)) {
        const auto relative = fs::relative(file, out).generic_string();
        if (relative != "manifest.json") {
            outputs[relative] = sha256_file(file);
        }
    }

    std::optional<int> median_run;
    if (fs::is_regular_file(out / "work" / "runs.csv")) {
        const auto runs = read_csv(out / "work" / "runs.csv");
        for (const auto &row : runs.rows) {
            if (row[runs.column("median")] == "1") {
                median_run = parse_int(row[runs.column("run")], "median run");
            }
        }
    }

    const auto settings = settings_json(config);
    nlohmann::json manifest{
        {"seed", config.scenario.seed},
        {"runs", config.scenario.runs},
        {"settings", settings},
        {"settings_sha256", sha256_hex(settings.dump())},
        {"inputs", inputs},
        {"outputs", outputs},
    };
    manifest["median_run"] = median_run ? nlohmann::json(*median_run) : nlohmann::json(nullptr);
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

void write_bundle_pipeline_config(const fs::path &bundle_dir) {
    const nlohmann::json doc{
        {"scenario", "scenario.json"},
        {"geography", "geography.csv"},
        {"population", "population.csv"},
        {"survey", "survey.csv"},
        {"census_history", "census_history.csv"},
        {"reference_areas", "reference_areas.csv"},
        {"centroids", "centroids.csv"},
        {"facilities", "facilities.csv"},
        {"output_years", nlohmann::json::array()},
        {"link", "logit"},
        {"forecast_samples", kDefaultForecastSamples},
        {"min_alignment_rows", 30},
        {"report_top", 10},
    };
    write_text(bundle_dir / "pipeline.json", doc.dump(2) + "\n");
}

void run_pipeline(const PipelineConfig &config, const fs::path &out) {
    run_stage("config", [&] { config.validate(); });
    fs::create_directories(out);
    run_stage("simulate", [&] { simulate_stage(config, out); });
    run_stage("fit", [&] { fit_stage(config, out); });
    run_stage("forecast", [&] { forecast_stage(config, out); });
    run_stage("predict", [&] { predict_stage(config, out); });
    run_stage("align", [&] { align_stage(config, out); });
    run_stage("aggregate", [&] { aggregate_stage(config, out); });
    run_stage("validate", [&] { (void)validate_stage(config, out); });
    run_stage("casestudy", [&] { casestudy_stage(config, out); });
    run_stage("report", [&] { (void)report_stage(out, config.report_top); });
    run_stage("manifest", [&] { write_manifest(config, out); });
}

} // namespace srh
