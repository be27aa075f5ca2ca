#include <doctest.h>

#include "srh/core/csv.hpp"
#include "srh/core/hash.hpp"
#include "srh/pipeline.hpp"
#include "srh/population_io.hpp"
#include "srh/synthetic.hpp"
#include "test_support.hpp"

#include <fstream>
#include <set>
#include <sstream>

using namespace srh;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &path) {
    std::ifstream in{path, std::ios::binary};
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::map<std::string, std::string> tree(const fs::path &dir) {
    std::map<std::string, std::string> files;
    for (const auto &entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.emplace(fs::relative(entry.path(), dir).generic_string(), slurp(entry.path()));
        }
    }
    return files;
}

GeneratorSpec tiny_spec() {
    auto spec = GeneratorSpec::standard();
    spec.areas = 16;
    spec.counties = 8;
    spec.min_area_size = 60;
    spec.max_area_size = 90;
    spec.survey_size = 4'000;
    spec.seed = 11;
    return spec;
}

PipelineConfig bundle_config(const GeneratorSpec &spec, const fs::path &dir, int horizon, int runs) {
    write_synthetic_bundle(spec, dir);
    write_bundle_pipeline_config(dir);
    auto config = PipelineConfig::load(dir / "pipeline.json");
    config.scenario.end_year = config.scenario.start_year + horizon;
    config.scenario.runs = runs;
    config.scenario.workers = 1;
    config.forecast_samples = 100;
    return config;
}

void write_areas(const fs::path &path, const std::vector<std::pair<std::string, std::pair<double, SrhDistribution>>> &rows) {
    std::vector<AreaResult> results;
    for (const auto &[id, value] : rows) {
        AreaResult r;
        r.area_id = id;
        r.adults = value.first;
        r.predicted = value.second;
        r.mean_srh = mean_srh(value.second);
        results.push_back(r);
    }
    write_area_results(path, results);
}

SrhDistribution dist(double a, double b, double c, double d, double e) {
    SrhDistribution x;
    x << a, b, c, d, e;
    return x;
}

} // namespace

TEST_CASE("a one-year pipeline on tiny inputs emits valid distributions and a manifest") {
    testing::TempDir inputs{"pipe_in"};
    testing::TempDir out{"pipe_out"};
    const auto config = bundle_config(tiny_spec(), inputs.path(), 1, 2);
    run_pipeline(config, out.path());

    const int start = config.scenario.start_year;
    for (int year : {start, start + 1}) {
        for (auto scenario : kOutputScenarios) {
            const auto path = out.path() / fmt::format("areas_{}_{}.csv", year, scenario);
            REQUIRE(fs::exists(path));
            const auto areas = read_area_results(path);
            CHECK(areas.size() == 16);
            for (const auto &a : areas) {
                CHECK(is_valid_distribution(a.predicted, 1e-9));
                CHECK(a.adults > 0.0);
            }
        }
    }
    // The base year is observed, so every scenario aligns to the same census.
    CHECK(slurp(out.path() / fmt::format("areas_{}_best.csv", start)) ==
          slurp(out.path() / fmt::format("areas_{}_worst.csv", start)));
    CHECK(fs::exists(out.path() / "forecast" / fmt::format("forecast_{}.csv", start + 1)));
    CHECK_FALSE(fs::exists(out.path() / "forecast" / fmt::format("forecast_{}.csv", start)));
    CHECK(fs::exists(out.path() / "accounting" / "accounting_mean.csv"));
    CHECK(fs::exists(out.path() / "validation" / "summary.csv"));
    CHECK(fs::exists(out.path() / "casestudy" / fmt::format("casestudy_{}.csv", start + 1)));
    CHECK(fs::exists(out.path() / "report" / "national.csv"));

    const auto manifest = nlohmann::json::parse(slurp(out.path() / "manifest.json"));
    CHECK(manifest.at("seed") == config.scenario.seed);
    CHECK(manifest.at("inputs").at("population").at("sha256") == sha256_file(inputs.path() / "population.csv"));
    CHECK(manifest.at("outputs").at("report/national.csv") == sha256_file(out.path() / "report" / "national.csv"));
    CHECK_FALSE(manifest.at("outputs").contains("manifest.json"));

    const auto runs = read_csv(out.path() / "work" / "runs.csv");
    int flagged = 0;
    std::vector<double> sizes;
    double median_size = 0;
    for (const auto &row : runs.rows) {
        sizes.push_back(parse_real(row[1], "size"));
        if (row[2] == "1") {
            ++flagged;
            median_size = sizes.back();
        }
    }
    CHECK(flagged == 1);
    std::sort(sizes.begin(), sizes.end());
    CHECK(median_size == sizes[(sizes.size() - 1) / 2]);
    CHECK(manifest.at("median_run").is_number_integer());
}

TEST_CASE("identical manifests give byte-identical outputs across worker counts") {
    testing::TempDir inputs{"pipe_in"};
    testing::TempDir a{"pipe_a"};
    testing::TempDir b{"pipe_b"};
    auto config = bundle_config(tiny_spec(), inputs.path(), 2, 3);
    config.output_years = {config.scenario.start_year, config.scenario.start_year + 2};
    config.scenario.workers = 1;
    run_pipeline(config, a.path());
    config.scenario.workers = 4;
    run_pipeline(config, b.path());

    const auto left = tree(a.path());
    const auto right = tree(b.path());
    REQUIRE(left.size() == right.size());
    for (const auto &[name, bytes] : left) {
        INFO(name);
        REQUIRE(right.contains(name));
        CHECK(right.at(name) == bytes);
    }
}

TEST_CASE("re-running align and aggregate from intermediates reproduces the outputs") {
    testing::TempDir inputs{"pipe_in"};
    testing::TempDir out{"pipe_out"};
    const auto config = bundle_config(tiny_spec(), inputs.path(), 1, 2);
    run_pipeline(config, out.path());
    const auto before = tree(out.path());

    for (const auto &entry : fs::recursive_directory_iterator(out.path())) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("areas_") && name.ends_with(".csv")) {
            fs::remove(entry.path());
        }
    }
    fs::remove_all(out.path() / "alignment");
    align_stage(config, out.path());
    aggregate_stage(config, out.path());
    CHECK(tree(out.path()) == before);
}

TEST_CASE("children reaching 15 enter prediction in that year") {
    testing::TempDir inputs{"pipe_in"};
    testing::TempDir out{"pipe_out"};
    auto config = bundle_config(tiny_spec(), inputs.path(), 1, 1);
    simulate_stage(config, out.path());
    fit_stage(config, out.path());
    predict_stage(config, out.path());

    const int start = config.scenario.start_year;
    const auto geo = Geography::from_csv(config.geography);
    const auto base = read_population(out.path() / "work" / "run0" / fmt::format("population_{}.csv", start), geo);
    const auto next = read_population(out.path() / "work" / "run0" / fmt::format("population_{}.csv", start + 1), geo);
    std::set<PersonId> predicted_base;
    std::set<PersonId> predicted_next;
    for (auto [year, target] : {std::pair{start, &predicted_base}, std::pair{start + 1, &predicted_next}}) {
        const auto table = read_csv(out.path() / "work" / "run0" / fmt::format("predictions_{}.csv", year));
        for (const auto &row : table.rows) {
            target->insert(std::stoll(row[0]));
        }
    }
    std::set<PersonId> fourteen;
    for (const auto &p : base) {
        if (p.age == 14) {
            fourteen.insert(p.id);
            CHECK_FALSE(predicted_base.contains(p.id));
        }
    }
    int entered = 0;
    for (const auto &p : next) {
        if (fourteen.contains(p.id)) {
            CHECK(p.age == 15);
            CHECK(predicted_next.contains(p.id));
            ++entered;
        }
    }
    CHECK(entered > 0);
}

TEST_CASE("base-year self-prediction matches the synthetic reference areas") {
    auto spec = GeneratorSpec::standard();
    spec.areas = 200;
    spec.min_area_size = 150;
    spec.max_area_size = 250;
    testing::TempDir inputs{"pipe_in"};
    testing::TempDir out{"pipe_out"};
    const auto config = bundle_config(spec, inputs.path(), 0, 1);
    run_pipeline(config, out.path());
    const auto summary = read_csv(out.path() / "validation" / "summary.csv");
    const double mean_r2 = parse_real(summary.rows[0][summary.column("mean_r2")], "r2");
    const double mean_mse = parse_real(summary.rows[0][summary.column("mean_mse")], "mse");
    CHECK(parse_int(summary.rows[0][summary.column("areas")], "areas") == 200);
    CHECK(mean_r2 >= 0.9);
    CHECK(mean_mse <= 0.01);
}

TEST_CASE("report aggregates areas by adults and ranks every area") {
    testing::TempDir out{"report"};
    CHECK_THROWS_AS(build_report(out.path()), Error);
    try {
        (void)build_report(out.path());
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::missing_outputs);
    }

    SUBCASE("a single area is the nation") {
        const auto only = dist(0.4, 0.3, 0.2, 0.05, 0.05);
        write_areas(out.path() / "areas_2022_mean.csv", {{"A", {120.0, only}}});
        const auto report = build_report(out.path());
        REQUIRE(report.national.size() == 1);
        CHECK((report.national[0].proportions - only).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(report.rankings.at("mean").size() == 1);
    }

    SUBCASE("national rows re-aggregate the areas") {
        const std::vector<std::pair<std::string, std::pair<double, SrhDistribution>>> first{
            {"A", {100.0, dist(0.5, 0.3, 0.1, 0.05, 0.05)}},
            {"B", {300.0, dist(0.2, 0.4, 0.2, 0.1, 0.1)}},
            {"C", {50.0, dist(0.6, 0.2, 0.1, 0.05, 0.05)}}};
        const std::vector<std::pair<std::string, std::pair<double, SrhDistribution>>> last{
            {"A", {110.0, dist(0.4, 0.3, 0.2, 0.05, 0.05)}},
            {"B", {280.0, dist(0.3, 0.4, 0.2, 0.05, 0.05)}},
            {"C", {60.0, dist(0.6, 0.2, 0.1, 0.05, 0.05)}}};
        write_areas(out.path() / "areas_2022_mean.csv", first);
        write_areas(out.path() / "areas_2057_mean.csv", last);
        const auto report = report_stage(out.path(), 2);

        for (const auto &[rows, year] : {std::pair{&first, 2022}, std::pair{&last, 2057}}) {
            double adults = 0;
            SrhDistribution mass = SrhDistribution::Zero();
            for (const auto &[id, value] : *rows) {
                adults += value.first;
                for (int k = 0; k < kSrhCategories; ++k) {
                    mass(k) += value.first * value.second(k);
                }
            }
            const auto it = std::find_if(report.national.begin(), report.national.end(),
                                         [&](const NationalRow &r) { return r.year == year; });
            REQUIRE(it != report.national.end());
            CHECK(it->adults == doctest::Approx(adults));
            CHECK(((it->proportions - mass / adults).cwiseAbs().maxCoeff()) < 1e-12);
        }

        const auto &ranking = report.rankings.at("mean");
        std::set<std::string> ids;
        for (const auto &r : ranking) {
            ids.insert(r.area_id);
        }
        CHECK(ids == std::set<std::string>{"A", "B", "C"});
        // B improves (mean SRH falls), C is unchanged, A deteriorates.
        CHECK(ranking.front().area_id == "B");
        CHECK(ranking.back().area_id == "A");
        CHECK(ranking[1].change == doctest::Approx(0.0));
        CHECK(fs::exists(out.path() / "report" / "ranking_mean.csv"));
        CHECK(fs::exists(out.path() / "report" / "summary.md"));
    }
}

TEST_CASE("stage failures carry the stage name") {
    testing::TempDir inputs{"pipe_in"};
    testing::TempDir out{"pipe_out"};
    auto config = bundle_config(tiny_spec(), inputs.path(), 1, 1);
    fs::remove(inputs.path() / "survey.csv");
    try {
        run_pipeline(config, out.path());
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.message().starts_with("[fit] "));
    }

    config.output_years = {config.scenario.start_year + 5};
    try {
        run_pipeline(config, out.path());
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::invalid_config);
        CHECK(e.message().starts_with("[config] "));
    }
}

TEST_CASE("pipeline config round-trips and resolves relative paths") {
    testing::TempDir inputs{"pipe_in"};
    write_synthetic_bundle(tiny_spec(), inputs.path());
    write_bundle_pipeline_config(inputs.path());
    const auto config = PipelineConfig::load(inputs.path() / "pipeline.json");
    CHECK(config.population == inputs.path() / "population.csv");
    CHECK(config.scenario.rates_dir == inputs.path() / "rates");
    REQUIRE(config.reference_areas.has_value());
    CHECK(config.years() == std::vector<int>{config.scenario.start_year, config.scenario.end_year});

    const auto again = PipelineConfig::from_json(config.to_json(), "/elsewhere");
    CHECK(again.population == config.population);
    CHECK(again.to_json() == config.to_json());
}
