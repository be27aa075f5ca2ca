#include "srh/pipeline.hpp"
#include "srh/synthetic.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<unsigned> workers;
    fs::path out{"out"};
    fs::path config;
    std::string log_level{"info"};
};

srh::PipelineConfig load_config(const GlobalOptions &options) {
    if (options.config.empty()) {
        throw srh::Error{srh::ErrorCode::invalid_config, "--config <pipeline.json> is required"};
    }
    auto config = srh::PipelineConfig::load(options.config);
    if (options.seed) {
        config.scenario.seed = *options.seed;
    }
    if (options.runs) {
        config.scenario.runs = *options.runs;
    }
    if (options.workers) {
        config.scenario.workers = *options.workers;
    }
    config.validate();
    return config;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Small-area self-rated health projection: microsimulation, ordinal regression, "
                 "alignment and compositional forecasting"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions options;
    app.add_option("--seed", options.seed, "Master seed (overrides the scenario file)");
    app.add_option("--runs", options.runs, "Monte Carlo microsimulation runs")->check(CLI::PositiveNumber);
    app.add_option("--workers", options.workers, "Worker threads (0 = hardware concurrency)");
    app.add_option("--out", options.out, "Output directory")->capture_default_str();
    app.add_option("--config", options.config, "Pipeline config JSON");
    app.add_option("--log-level", options.log_level, "trace, debug, info, warn, error or off")
        ->capture_default_str();

    std::function<void()> action;
    std::string stage;

    auto *synth = app.add_subcommand("synth", "Write a synthetic input bundle and its pipeline.json");
    fs::path spec_path;
    synth->add_option("--spec", spec_path, "Generator spec JSON (defaults when omitted)");
    synth->callback([&] {
        stage = "synth";
        action = [&] {
            auto spec = spec_path.empty() ? srh::GeneratorSpec::standard() : srh::GeneratorSpec::load(spec_path);
            if (options.seed) {
                spec.seed = *options.seed;
            }
            srh::write_synthetic_bundle(spec, options.out);
            srh::write_bundle_pipeline_config(options.out);
            spdlog::info("wrote synthetic bundle to {}", options.out.string());
        };
    });

    auto add_stage = [&](const char *name, const char *help, std::function<void(const srh::PipelineConfig &)> fn) {
        app.add_subcommand(name, help)->callback([&, name, fn] {
            stage = name;
            action = [&, fn] {
                const auto config = load_config(options);
                fs::create_directories(options.out);
                fn(config);
            };
        });
    };
    add_stage("simulate", "Simulate every run and write population snapshots and accounting tables",
              [&](const srh::PipelineConfig &c) { srh::simulate_stage(c, options.out); });
    add_stage("fit", "Fit the ordinal model to the survey",
              [&](const srh::PipelineConfig &c) { srh::fit_stage(c, options.out); });
    add_stage("forecast", "Forecast cohort and national SRH compositions for the output years",
              [&](const srh::PipelineConfig &c) { srh::forecast_stage(c, options.out); });
    add_stage("predict", "Predict SRH probabilities for every snapshot",
              [&](const srh::PipelineConfig &c) { srh::predict_stage(c, options.out); });
    add_stage("align", "Align predictions per cohort and aggregate each run by area",
              [&](const srh::PipelineConfig &c) { srh::align_stage(c, options.out); });
    add_stage("aggregate", "Pool area results over runs",
              [&](const srh::PipelineConfig &c) { srh::aggregate_stage(c, options.out); });
    add_stage("validate", "Compare base-year areas with the reference distributions", [&](const srh::PipelineConfig &c) {
        if (const auto summary = srh::validate_stage(c, options.out)) {
            fmt::print("areas {} mean_r2 {:.6f} mean_mse {:.6f}\n", summary->areas, summary->mean_r2, summary->mean_mse);
        }
    });
    add_stage("casestudy", "Distance to the nearest facility against mean SRH",
              [&](const srh::PipelineConfig &c) { srh::casestudy_stage(c, options.out); });
    add_stage("run", "Run every stage and write the manifest",
              [&](const srh::PipelineConfig &c) { srh::run_pipeline(c, options.out); });

    auto *report = app.add_subcommand("report", "National proportions and area rankings from the outputs");
    std::size_t top = 10;
    report->add_option("--top", top, "Areas listed at each end of the ranking")->capture_default_str();
    report->callback([&] {
        stage = "report";
        action = [&] { (void)srh::report_stage(options.out, top); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    spdlog::set_level(spdlog::level::from_str(options.log_level));
    try {
        srh::run_stage(stage, action);
    } catch (const srh::Error &e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
