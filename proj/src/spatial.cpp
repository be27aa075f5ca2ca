#include "srh/spatial.hpp"

#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <unordered_map>

namespace srh {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

std::array<std::size_t, kSrhCategories> proportion_columns(const CsvTable &table) {
    std::array<std::size_t, kSrhCategories> cols{};
    for (std::size_t k = 0; k < cols.size(); ++k) {
        cols[k] = table.column(kSrhColumns[k]);
    }
    return cols;
}

SrhDistribution read_distribution(const std::vector<std::string> &row,
                                  const std::array<std::size_t, kSrhCategories> &cols,
                                  std::string_view where) {
    SrhDistribution d;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        d(static_cast<Eigen::Index>(k)) = parse_real(row[cols[k]], where);
    }
    return d;
}

std::string optional_real(const std::optional<double> &value) {
    return value ? format_real(*value) : std::string{};
}

std::optional<double> parse_optional(const std::string &text, std::string_view where) {
    if (text.empty()) {
        return std::nullopt;
    }
    return parse_real(text, where);
}

} // namespace

SrhDistribution area_distribution(std::span<const SrhCategory> categories) {
    if (categories.empty()) {
        throw Error{ErrorCode::empty_area, "no eligible individuals in area"};
    }
    SrhDistribution counts = SrhDistribution::Zero();
    for (auto c : categories) {
        counts(static_cast<int>(c)) += 1.0;
    }
    return counts / static_cast<double>(categories.size());
}

SrhDistribution area_distribution(std::span<const SrhDistribution> probabilities) {
    if (probabilities.empty()) {
        throw Error{ErrorCode::empty_area, "no eligible individuals in area"};
    }
    SrhDistribution sum = SrhDistribution::Zero();
    for (const auto &p : probabilities) {
        sum += p;
    }
    return sum / sum.sum();
}

FitStatistics r2_and_mse(const SrhDistribution &predicted, const SrhDistribution &reference) {
    require_distribution(predicted, "predicted distribution");
    require_distribution(reference, "reference distribution");
    const double ss_res = (predicted - reference).squaredNorm();
    const double ss_tot = (reference.array() - 1.0 / kSrhCategories).square().sum();
    FitStatistics stats;
    stats.mse = ss_res / kSrhCategories;
    if (ss_tot > 0.0) {
        stats.r2 = 1.0 - ss_res / ss_tot;
    }
    return stats;
}

AreaAggregator::AreaAggregator(std::size_t areas) : cells_(areas) {}

void AreaAggregator::add(AreaIndex area, int age, Education education, const SrhDistribution &outcome) {
    auto &cell = cells_.at(area);
    ++cell.adults;
    cell.age += age;
    cell.education += education_scale(education);
    cell.mass += outcome;
}

void AreaAggregator::add(AreaIndex area, int age, Education education, SrhCategory outcome) {
    add(area, age, education, degenerate_distribution(outcome));
}

std::vector<AreaResult> AreaAggregator::results(const Geography &geography) const {
    if (cells_.size() != geography.size()) {
        throw Error{ErrorCode::invalid_input, "aggregator and geography differ in area count"};
    }
    std::vector<AreaResult> out;
    out.reserve(cells_.size());
    std::size_t empty = 0;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto &cell = cells_[i];
        if (cell.adults == 0) {
            ++empty;
            continue;
        }
        AreaResult r;
        r.area_id = geography.area(static_cast<AreaIndex>(i)).id;
        r.adults = static_cast<double>(cell.adults);
        r.predicted = cell.mass / cell.mass.sum();
        r.mean_srh = mean_srh(r.predicted);
        r.mean_age = cell.age / static_cast<double>(cell.adults);
        r.mean_education = cell.education / static_cast<double>(cell.adults);
        out.push_back(std::move(r));
    }
    if (empty > 0) {
        spdlog::info("EmptyArea: {} areas have no adults and were skipped", empty);
    }
    return out;
}

void GeoPoint::validate() const {
    if (!(lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0)) {
        throw Error{ErrorCode::invalid_input, fmt::format("coordinate ({}, {}) out of range", lat, lon)};
    }
}

double haversine_km(const GeoPoint &a, const GeoPoint &b) {
    a.validate();
    b.validate();
    const double dlat = (b.lat - a.lat) * kDegree;
    const double dlon = (b.lon - a.lon) * kDegree;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * kDegree) * std::cos(b.lat * kDegree) * std::sin(dlon / 2) *
                         std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

NearestFacility nearest_facility(const GeoPoint &centroid, std::span<const FacilitySite> facilities) {
    if (facilities.empty()) {
        throw Error{ErrorCode::no_facilities, "at least one facility is required"};
    }
    NearestFacility best{0, haversine_km(centroid, facilities[0].location)};
    for (std::size_t i = 1; i < facilities.size(); ++i) {
        const double d = haversine_km(centroid, facilities[i].location);
        if (d < best.distance_km) {
            best = {i, d};
        }
    }
    return best;
}

std::string_view to_string(Quadrant quadrant) noexcept {
    switch (quadrant) {
    case Quadrant::Q1:
        return "Q1";
    case Quadrant::Q2:
        return "Q2";
    case Quadrant::Q3:
        return "Q3";
    case Quadrant::Q4:
        return "Q4";
    }
    return "?";
}

std::vector<Quadrant> quadrant_classify(std::span<const QuadrantPoint> areas) {
    if (areas.size() < 2) {
        throw Error{ErrorCode::invalid_input, "quadrant classification needs at least two areas"};
    }
    double srh = 0.0;
    double distance = 0.0;
    for (const auto &a : areas) {
        srh += a.mean_srh;
        distance += a.distance_km;
    }
    srh /= static_cast<double>(areas.size());
    distance /= static_cast<double>(areas.size());

    std::vector<Quadrant> out;
    out.reserve(areas.size());
    for (const auto &a : areas) {
        const bool worse = a.mean_srh > srh;
        const bool farther = a.distance_km > distance;
        out.push_back(worse ? (farther ? Quadrant::Q1 : Quadrant::Q2)
                            : (farther ? Quadrant::Q4 : Quadrant::Q3));
    }
    return out;
}

ValidationSummary validate_areas(std::vector<AreaResult> &results,
                                 const std::vector<std::pair<std::string, SrhDistribution>> &reference) {
    std::unordered_map<std::string, const SrhDistribution *> lookup;
    for (const auto &[id, dist] : reference) {
        lookup[id] = &dist;
    }
    ValidationSummary summary;
    double r2_sum = 0.0;
    double mse_sum = 0.0;
    for (auto &r : results) {
        const auto it = lookup.find(r.area_id);
        if (it == lookup.end()) {
            continue;
        }
        r.reference = *it->second;
        const auto stats = r2_and_mse(r.predicted, *r.reference);
        r.mse = stats.mse;
        r.r2 = stats.r2;
        ++summary.areas;
        mse_sum += stats.mse;
        if (stats.r2) {
            ++summary.areas_with_r2;
            r2_sum += *stats.r2;
        }
    }
    if (summary.areas > 0) {
        summary.mean_mse = mse_sum / static_cast<double>(summary.areas);
    }
    if (summary.areas_with_r2 > 0) {
        summary.mean_r2 = r2_sum / static_cast<double>(summary.areas_with_r2);
    }
    return summary;
}

std::vector<CaseStudyRow> facility_case_study(const std::vector<AreaResult> &results,
                                              const std::vector<std::pair<std::string, GeoPoint>> &centroids,
                                              std::span<const FacilitySite> facilities) {
    std::unordered_map<std::string, GeoPoint> where;
    for (const auto &[id, point] : centroids) {
        where[id] = point;
    }
    std::vector<CaseStudyRow> rows;
    std::size_t missing = 0;
    for (const auto &r : results) {
        const auto it = where.find(r.area_id);
        if (it == where.end()) {
            ++missing;
            continue;
        }
        const auto nearest = nearest_facility(it->second, facilities);
        rows.push_back({r.area_id, facilities[nearest.index].name, nearest.distance_km, r.mean_srh,
                        Quadrant::Q3});
    }
    if (missing > 0) {
        spdlog::warn("{} areas have no centroid and were left out of the case study", missing);
    }
    if (rows.size() >= 2) {
        std::vector<QuadrantPoint> points;
        points.reserve(rows.size());
        for (const auto &row : rows) {
            points.push_back({row.mean_srh, row.distance_km});
        }
        const auto quadrants = quadrant_classify(points);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].quadrant = quadrants[i];
        }
    }
    return rows;
}

std::vector<std::pair<std::string, SrhDistribution>> read_area_distributions(const std::filesystem::path &path) {
    const auto table = read_csv(path);
    const auto c_id = table.column("area_id");
    const auto cols = proportion_columns(table);
    std::vector<std::pair<std::string, SrhDistribution>> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto where = fmt::format("{} row {}", path.string(), i + 1);
        auto dist = read_distribution(table.rows[i], cols, where);
        require_distribution(dist, where);
        out.emplace_back(table.rows[i][c_id], dist);
    }
    return out;
}

void write_area_results(const std::filesystem::path &path, const std::vector<AreaResult> &results) {
    std::vector<std::string> header{"area_id", "adults", "mean_srh", "mean_age", "mean_education"};
    header.insert(header.end(), kSrhColumns.begin(), kSrhColumns.end());
    for (auto column : kSrhColumns) {
        header.push_back(fmt::format("ref_{}", column));
    }
    header.insert(header.end(), {"r2", "mse"});
    CsvWriter out{path, header};
    for (const auto &r : results) {
        std::vector<std::string> row{r.area_id, format_real(r.adults), format_real(r.mean_srh),
                                     format_real(r.mean_age), format_real(r.mean_education)};
        for (int k = 0; k < kSrhCategories; ++k) {
            row.push_back(format_real(r.predicted(k)));
        }
        for (int k = 0; k < kSrhCategories; ++k) {
            row.push_back(r.reference ? format_real((*r.reference)(k)) : std::string{});
        }
        row.push_back(optional_real(r.r2));
        row.push_back(optional_real(r.mse));
        out.write_row(row);
    }
    out.close();
}

std::vector<AreaResult> read_area_results(const std::filesystem::path &path) {
    const auto table = read_csv(path);
    const auto c_id = table.column("area_id");
    const auto cols = proportion_columns(table);
    std::vector<AreaResult> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto &row = table.rows[i];
        const auto where = fmt::format("{} row {}", path.string(), i + 1);
        AreaResult r;
        r.area_id = row[c_id];
        r.predicted = read_distribution(row, cols, where);
        require_distribution(r.predicted, where);
        r.mean_srh = table.has_column("mean_srh") ? parse_real(row[table.column("mean_srh")], where)
                                                  : mean_srh(r.predicted);
        if (table.has_column("adults")) {
            r.adults = parse_real(row[table.column("adults")], where);
        }
        if (table.has_column("mean_age")) {
            r.mean_age = parse_real(row[table.column("mean_age")], where);
        }
        if (table.has_column("mean_education")) {
            r.mean_education = parse_real(row[table.column("mean_education")], where);
        }
        if (table.has_column("r2")) {
            r.r2 = parse_optional(row[table.column("r2")], where);
            r.mse = parse_optional(row[table.column("mse")], where);
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_validation_summary(const std::filesystem::path &path, const ValidationSummary &summary) {
    CsvWriter out{path, {"areas", "areas_with_r2", "mean_r2", "mean_mse"}};
    out.write_row({std::to_string(summary.areas), std::to_string(summary.areas_with_r2),
                   format_real(summary.mean_r2), format_real(summary.mean_mse)});
    out.close();
}

std::vector<std::pair<std::string, GeoPoint>> read_centroids(const std::filesystem::path &path) {
    const auto table = read_csv(path);
    const auto c_id = table.column("area_id");
    const auto c_lat = table.column("lat");
    const auto c_lon = table.column("lon");
    std::vector<std::pair<std::string, GeoPoint>> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto where = fmt::format("{} row {}", path.string(), i + 1);
        GeoPoint p{parse_real(table.rows[i][c_lat], where), parse_real(table.rows[i][c_lon], where)};
        p.validate();
        out.emplace_back(table.rows[i][c_id], p);
    }
    return out;
}

void write_centroids(const std::filesystem::path &path,
                     const std::vector<std::pair<std::string, GeoPoint>> &centroids) {
    CsvWriter out{path, {"area_id", "lat", "lon"}};
    for (const auto &[id, p] : centroids) {
        out.write_row({id, format_real(p.lat), format_real(p.lon)});
    }
    out.close();
}

std::vector<FacilitySite> read_facilities(const std::filesystem::path &path) {
    const auto table = read_csv(path);
    const auto c_name = table.column("name");
    const auto c_lat = table.column("lat");
    const auto c_lon = table.column("lon");
    std::vector<FacilitySite> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto where = fmt::format("{} row {}", path.string(), i + 1);
        FacilitySite site{table.rows[i][c_name],
                          {parse_real(table.rows[i][c_lat], where), parse_real(table.rows[i][c_lon], where)}};
        site.location.validate();
        out.push_back(std::move(site));
    }
    return out;
}

void write_facilities(const std::filesystem::path &path, std::span<const FacilitySite> facilities) {
    CsvWriter out{path, {"name", "lat", "lon"}};
    for (const auto &f : facilities) {
        out.write_row({f.name, format_real(f.location.lat), format_real(f.location.lon)});
    }
    out.close();
}

void write_case_study(const std::filesystem::path &path, const std::vector<CaseStudyRow> &rows) {
    CsvWriter out{path, {"area_id", "nearest_facility", "distance_km", "mean_srh", "quadrant"}};
    for (const auto &r : rows) {
        out.write_row({r.area_id, r.facility, format_real(r.distance_km), format_real(r.mean_srh),
                       std::string{to_string(r.quadrant)}});
    }
    out.close();
}

void write_geojson(const std::filesystem::path &path, const std::vector<AreaResult> &results,
                   const std::vector<std::pair<std::string, GeoPoint>> &centroids) {
    std::unordered_map<std::string, GeoPoint> where;
    for (const auto &[id, point] : centroids) {
        where[id] = point;
    }
    nlohmann::json features = nlohmann::json::array();
    for (const auto &r : results) {
        const auto it = where.find(r.area_id);
        if (it == where.end()) {
            continue;
        }
        nlohmann::json properties{{"area_id", r.area_id},
                                  {"adults", r.adults},
                                  {"mean_srh", r.mean_srh},
                                  {"mean_age", r.mean_age},
                                  {"mean_education", r.mean_education}};
        for (int k = 0; k < kSrhCategories; ++k) {
            properties[std::string{kSrhColumns[static_cast<std::size_t>(k)]}] = r.predicted(k);
        }
        if (r.r2) {
            properties["r2"] = *r.r2;
        }
        if (r.mse) {
            properties["mse"] = *r.mse;
        }
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", {it->second.lon, it->second.lat}}}},
                            {"properties", properties}});
    }
    std::ofstream out{path};
    if (!out) {
        throw Error{ErrorCode::io, fmt::format("cannot write {}", path.string())};
    }
    out << nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) << '\n';
}

} // namespace srh
