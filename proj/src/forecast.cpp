#include "srh/forecast.hpp"
#include "srh/core/csv.hpp"
#include "srh/core/parallel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace srh {

namespace {



std::vector<std::string> cohort_fields(const CohortKey &key, const AgeBanding &banding) {
    return {banding.label_for_age(key.age_group), std::string{code(key.sex)},
            std::string{code(key.economic_status)}};
}

void append_proportions(std::vector<std::string> &row, const SrhDistribution &dist) {
    for (int k = 0; k < kSrhCategories; ++k) {
        row.push_back(format_real(dist(k)));
    }
}

} // namespace

AlrGpSet fit_alr_gps(const CompositionHistory &history, const GpFitOptions &options) {
    if (history.size() < 2) {
        throw Error{ErrorCode::invalid_input, "forecasting needs at least two historical years"};
    }
    std::vector<int> years;
    std::array<std::vector<double>, kSrhCategories - 1> series;
    for (const auto &[year, dist] : history) {
        years.push_back(year);
        const auto y = alr(dist);
        for (int d = 0; d < kSrhCategories - 1; ++d) {
            series[static_cast<std::size_t>(d)].push_back(y(d));
        }
    }
    return {fit_gp(years, series[0], options), fit_gp(years, series[1], options),
            fit_gp(years, series[2], options), fit_gp(years, series[3], options)};
}

std::vector<SrhDistribution> sample_futures(const AlrGpSet &models, double year, std::size_t n,
                                            RngEngine &rng) {
    if (n == 0) {
        throw Error{ErrorCode::invalid_input, "sample count must be positive"};
    }
    std::array<GpPrediction<double>, kSrhCategories - 1> posterior{};
    for (std::size_t d = 0; d < posterior.size(); ++d) {
        posterior[d] = models[d].predict(year);
    }
    std::normal_distribution<double> normal{0.0, 1.0};
    std::vector<SrhDistribution> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        AlrVector<double> y;
        for (std::size_t d = 0; d < posterior.size(); ++d) {
            y(static_cast<Eigen::Index>(d)) =
                posterior[d].mean + std::sqrt(posterior[d].variance) * normal(rng);
        }
        out.push_back(alr_inv(y));
    }
    return out;
}

SrhDistribution posterior_mean_composition(const AlrGpSet &models, double year) {
    AlrVector<double> y;
    for (std::size_t d = 0; d < models.size(); ++d) {
        y(static_cast<Eigen::Index>(d)) = models[d].predict(year).mean;
    }
    return alr_inv(y);
}

std::size_t nearest_rank(double percentile, std::size_t n) {
    const auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(rank, 1, n);
}

Scenarios extract_scenarios(std::span<const SrhDistribution> samples) {
    const auto n = samples.size();
    if (n < kMinScenarioSamples) {
        throw Error{ErrorCode::too_few_samples,
                    fmt::format("{} samples; at least {} needed", n, kMinScenarioSamples)};
    }
    // Total order on samples (Very Good first, then the remaining parts) keeps the selection
    // independent of the input order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto &x = samples[a];
        const auto &y = samples[b];
        return std::lexicographical_compare(x.data(), x.data() + kSrhCategories, y.data(),
                                            y.data() + kSrhCategories);
    });

    Scenarios out;
    out.raw_mean = SrhDistribution::Zero();
    for (const auto &s : samples) {
        out.raw_mean += s;
    }
    out.raw_mean /= static_cast<double>(n);
    out.mean = closure(out.raw_mean);
    out.best = samples[order[nearest_rank(95.0, n) - 1]];
    out.worst = samples[order[nearest_rank(5.0, n) - 1]];

    std::vector<double> column(n);
    for (int k = 0; k < kSrhCategories; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = samples[i](k);
        }
        std::sort(column.begin(), column.end());
        out.p05(k) = column[nearest_rank(5.0, n) - 1];
        out.p95(k) = column[nearest_rank(95.0, n) - 1];
    }
    return out;
}

std::vector<ScenarioBundle> forecast_series(const CompositionHistory &history,
                                            std::span<const int> target_years,
                                            const ForecastOptions &options, std::uint64_t seed,
                                            std::uint64_t series_key) {
    const auto models = fit_alr_gps(history, options.gp);
    std::vector<ScenarioBundle> out;
    out.reserve(target_years.size());
    for (int year : target_years) {
        auto rng = substream(seed, StreamTag::forecast,
                             {series_key, static_cast<std::uint64_t>(year)});
        const auto samples = sample_futures(models, year, options.samples, rng);
        out.push_back(ScenarioBundle{year, extract_scenarios(samples),
                                     posterior_mean_composition(models, year), samples.size()});
    }
    return out;
}

std::vector<ScenarioBundle> forecast_national(const CompositionHistory &history,
                                              std::span<const int> target_years,
                                              const ForecastOptions &options, std::uint64_t seed) {
    // The national series uses a key no cohort index can produce.
    return forecast_series(history, target_years, options, seed, ~std::uint64_t{0});
}

std::map<CohortKey, std::vector<ScenarioBundle>>
forecast_cohorts(const std::map<CohortKey, CompositionHistory> &history,
                 std::span<const int> target_years, const ForecastOptions &options,
                 std::uint64_t seed, unsigned workers) {
    std::vector<const std::pair<const CohortKey, CompositionHistory> *> entries;
    for (const auto &entry : history) {
        entries.push_back(&entry);
    }
    std::vector<std::vector<ScenarioBundle>> results(entries.size());
    parallel_for(entries.size(), workers, [&](std::size_t i) {
        const auto &key = entries[i]->first;
        const auto series_key = static_cast<std::uint64_t>(CohortKeyHash{}(key));
        results[i] = forecast_series(entries[i]->second, target_years, options, seed, series_key);
    });
    std::map<CohortKey, std::vector<ScenarioBundle>> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out.emplace(entries[i]->first, std::move(results[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

CompositionHistory CensusHistory::national_series() const {
    if (!national.empty()) {
        return national;
    }
    std::map<int, SrhDistribution> sums;
    for (const auto &[key, series] : cohorts) {
        for (const auto &[year, dist] : series) {
            auto [it, inserted] = sums.try_emplace(year, SrhDistribution::Zero());
            it->second += population_of(key, year) * dist;
        }
    }
    CompositionHistory out;
    for (const auto &[year, sum] : sums) {
        if (sum.sum() > 0) {
            out.emplace(year, closure(sum));
        }
    }
    return out;
}

double CensusHistory::population_of(const CohortKey &key, int year) const {
    auto it = population.find(key);
    if (it == population.end()) {
        return 1.0;
    }
    auto jt = it->second.find(year);
    return jt == it->second.end() ? 1.0 : jt->second;
}

CensusHistory read_census_history(const std::filesystem::path &path, const AgeBanding &banding) {
    const auto table = read_csv(path);
    const auto year_col = table.column("year");
    const auto age_col = table.column("age_group");
    const auto sex_col = table.column("sex");
    const auto status_col = table.column("economic_status");
    const bool has_population = table.has_column("population");
    const auto population_col = has_population ? table.column("population") : 0;
    std::array<std::size_t, kSrhCategories> prop_cols{};
    for (int k = 0; k < kSrhCategories; ++k) {
        prop_cols[static_cast<std::size_t>(k)] = table.column(kSrhColumns[static_cast<std::size_t>(k)]);
    }

    // Weighted sums so several census labels mapping to one microdata status merge cleanly.
    std::map<std::pair<CohortKey, int>, std::pair<SrhDistribution, double>> sums;
    CensusHistory out;
    for (const auto &row : table.rows) {
        const int year = parse_int(row[year_col], "year");
        SrhDistribution dist;
        for (int k = 0; k < kSrhCategories; ++k) {
            dist(k) = parse_real(row[prop_cols[static_cast<std::size_t>(k)]], "proportion");
        }
        if (!is_valid_distribution(dist, 1e-6)) {
            require_distribution(dist, fmt::format("{} year {}", path.string(), year));
        }
        dist = closure(dist);
        if (row[age_col] == "*" && row[sex_col] == "*" && row[status_col] == "*") {
            out.national[year] = dist;
            continue;
        }
        const auto lower = banding.parse_label(row[age_col]);
        if (!lower) {
            throw Error{ErrorCode::invalid_input,
                        fmt::format("{}: unknown age group '{}'", path.string(), row[age_col])};
        }
        const CohortKey key{*lower, parse_category<Sex>(row[sex_col]),
                            map_economic_status(row[status_col])};
        const double weight = has_population ? parse_real(row[population_col], "population") : 1.0;
        auto &[sum, total] = sums[{key, year}];
        if (total == 0.0) {
            sum = SrhDistribution::Zero();
        }
        sum += weight * dist;
        total += weight;
    }
    for (const auto &[key_year, value] : sums) {
        const auto &[key, year] = key_year;
        const auto &[sum, total] = value;
        if (total <= 0.0) {
            continue;
        }
        out.cohorts[key][year] = sum / total;
        if (has_population) {
            out.population[key][year] = total;
        }
    }
    return out;
}

void write_census_history(const std::filesystem::path &path, const CensusHistory &history,
                          const AgeBanding &banding) {
    std::vector<std::string> header{"year", "age_group", "sex", "economic_status", "population"};
    header.insert(header.end(), kSrhColumns.begin(), kSrhColumns.end());
    CsvWriter out{path, header};
    for (const auto &[year, dist] : history.national) {
        std::vector<std::string> row{std::to_string(year), "*", "*", "*", ""};
        append_proportions(row, dist);
        out.write_row(row);
    }
    for (const auto &[key, series] : history.cohorts) {
        for (const auto &[year, dist] : series) {
            std::vector<std::string> row{std::to_string(year)};
            auto fields = cohort_fields(key, banding);
            row.insert(row.end(), fields.begin(), fields.end());
            row.push_back(format_real(history.population_of(key, year)));
            append_proportions(row, dist);
            out.write_row(row);
        }
    }
    out.close();
}

void write_forecast_year(const std::filesystem::path &path, int year,
                         const std::map<CohortKey, std::vector<ScenarioBundle>> &cohorts,
                         const std::vector<ScenarioBundle> *national, const AgeBanding &banding) {
    std::vector<std::string> header{"year", "age_group", "sex", "economic_status", "scenario"};
    header.insert(header.end(), kSrhColumns.begin(), kSrhColumns.end());
    CsvWriter out{path, header};
    auto emit = [&](const std::vector<std::string> &key_fields, const ScenarioBundle &bundle) {
        const std::array<std::pair<std::string_view, const SrhDistribution *>, 6> rows{{
            {"mean", &bundle.scenarios.mean},
            {"best", &bundle.scenarios.best},
            {"worst", &bundle.scenarios.worst},
            {"p05", &bundle.scenarios.p05},
            {"p95", &bundle.scenarios.p95},
            {"alr_mean", &bundle.posterior_mean},
        }};
        for (const auto &[tag, dist] : rows) {
            std::vector<std::string> row{std::to_string(year)};
            row.insert(row.end(), key_fields.begin(), key_fields.end());
            row.emplace_back(tag);
            append_proportions(row, *dist);
            out.write_row(row);
        }
    };
    auto bundle_for = [year](const std::vector<ScenarioBundle> &bundles) -> const ScenarioBundle * {
        for (const auto &b : bundles) {
            if (b.year == year) {
                return &b;
            }
        }
        return nullptr;
    };
    if (national != nullptr) {
        if (const auto *bundle = bundle_for(*national)) {
            emit({"*", "*", "*"}, *bundle);
        }
    }
    for (const auto &[key, bundles] : cohorts) {
        if (const auto *bundle = bundle_for(bundles)) {
            emit(cohort_fields(key, banding), *bundle);
        }
    }
    out.close();
}

std::map<CohortKey, SrhDistribution> read_forecast_scenario(const std::filesystem::path &path,
                                                            std::string_view scenario,
                                                            std::optional<SrhDistribution> *national,
                                                            const AgeBanding &banding) {
    const auto table = read_csv(path);
    const auto age_col = table.column("age_group");
    const auto sex_col = table.column("sex");
    const auto status_col = table.column("economic_status");
    const auto scenario_col = table.column("scenario");
    std::map<CohortKey, SrhDistribution> out;
    for (const auto &row : table.rows) {
        if (row[scenario_col] != scenario) {
            continue;
        }
        SrhDistribution dist;
        for (int k = 0; k < kSrhCategories; ++k) {
            dist(k) = parse_real(row[table.column(kSrhColumns[static_cast<std::size_t>(k)])],
                                 "proportion");
        }
        if (row[age_col] == "*") {
            if (national != nullptr) {
                *national = dist;
            }
            continue;
        }
        const auto lower = banding.parse_label(row[age_col]);
        if (!lower) {
            throw Error{ErrorCode::invalid_input,
                        fmt::format("{}: unknown age group '{}'", path.string(), row[age_col])};
        }
        out[CohortKey{*lower, parse_category<Sex>(row[sex_col]),
                      map_economic_status(row[status_col])}] = dist;
    }
    return out;
}

std::vector<int> parse_year_range(std::string_view text) {
    std::vector<int> years;
    auto colon = text.find(':');
    if (colon != std::string_view::npos) {
        const int first = parse_int(text.substr(0, colon), "year range");
        const int last = parse_int(text.substr(colon + 1), "year range");
        if (last < first) {
            throw Error{ErrorCode::invalid_input, fmt::format("empty year range '{}'", text)};
        }
        for (int y = first; y <= last; ++y) {
            years.push_back(y);
        }
        return years;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
        years.push_back(parse_int(piece, "year list"));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return years;
}

} // namespace srh
