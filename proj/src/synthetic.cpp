#include "srh/synthetic.hpp"

#include "srh/compositional.hpp"
#include "srh/core/csv.hpp"
#include "srh/core/rng.hpp"
#include "srh/microsim.hpp"
#include "srh/population_io.hpp"
#include "srh/scenario.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace srh {

namespace {

constexpr int kAgeBands = 21;
constexpr double kNationalPopulation = 5.1e6;

struct Nuts3Region {
    const char *name;
    Region region;
};

constexpr std::array<Nuts3Region, 8> kNuts3{{{"Border", Region::connacht_ulster},
                                             {"West", Region::connacht_ulster},
                                             {"Mid-West", Region::munster},
                                             {"South-East", Region::leinster_rest},
                                             {"South-West", Region::munster},
                                             {"Dublin", Region::dublin},
                                             {"Mid-East", Region::leinster_rest},
                                             {"Midland", Region::leinster_rest}}};

const std::vector<double> &default_age_weights() {
    static const std::vector<double> weights{6.2, 7.0, 7.2, 6.6, 5.6, 5.8, 6.6, 7.6, 8.0, 7.4, 6.6,
                                             6.2, 5.6, 4.8, 4.0, 3.0, 2.0, 1.2, 0.6, 0.2, 0.05};
    return weights;
}

double standard_normal(RngEngine &rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename Container>
std::size_t draw_index(const Container &weights, RngEngine &rng) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) {
            return i;
        }
        u -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) {
            return i;
        }
    }
    return 0;
}

void require_probabilities(std::span<const double> values, std::string_view what) {
    double total = 0.0;
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error{ErrorCode::infeasible_spec, fmt::format("{} has a negative or non-finite entry", what)};
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw Error{ErrorCode::infeasible_spec, fmt::format("{} sums to {} instead of 1", what, total)};
    }
}

std::size_t married_band(int age) {
    if (age < 25) {
        return 0;
    }
    if (age < 35) {
        return 1;
    }
    if (age < 45) {
        return 2;
    }
    if (age < 65) {
        return 3;
    }
    return 4;
}

/// Status shares for adults of a given age, in EconomicStatus code order.
std::array<double, 8> status_shares(int age) {
    using S = EconomicStatus;
    std::array<double, 8> w{};
    auto set = [&](S s, double v) { w[static_cast<std::size_t>(s)] = v; };
    if (age < 20) {
        set(S::S, 0.85);
        set(S::W, 0.10);
        set(S::UNE, 0.05);
    } else if (age < 25) {
        set(S::S, 0.40);
        set(S::W, 0.45);
        set(S::UNE, 0.08);
        set(S::LAHF, 0.02);
        set(S::OTH, 0.03);
        set(S::UTWSD, 0.02);
    } else if (age < 65) {
        set(S::W, 0.68);
        set(S::UNE, 0.06);
        set(S::LAHF, 0.10);
        set(S::UTWSD, 0.05);
        set(S::OTH, 0.04);
        set(S::S, 0.03);
        set(S::R, age >= 55 ? 0.10 : 0.0);
    } else {
        set(S::R, 0.80);
        set(S::W, 0.10);
        set(S::LAHF, 0.05);
        set(S::UTWSD, 0.02);
        set(S::OTH, 0.03);
    }
    return w;
}

Education studying_for_age(int age) {
    if (age < 12) {
        return Education::P;
    }
    if (age < 15) {
        return Education::LS;
    }
    if (age < 18) {
        return Education::US;
    }
    return Education::DEG;
}

/// Draws one person living in `area`. Adults only when `adult_only`.
Individual draw_person(const GeneratorSpec &spec, const SyntheticArea &area, AreaIndex index, bool adult_only,
                       RngEngine &rng) {
    const auto &bands = spec.age_band_weights.empty() ? default_age_weights() : spec.age_band_weights;
    std::vector<double> weights(bands.begin(), bands.end());
    if (adult_only) {
        for (std::size_t b = 0; b < 3; ++b) {
            weights[b] = 0.0;
        }
    }
    const auto band = static_cast<int>(draw_index(weights, rng));
    const int span = band == kAgeBands - 1 ? 6 : 5;
    Individual p;
    p.age = band * 5 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(span)));
    p.sex = bernoulli(rng, spec.male_share) ? Sex::M : Sex::F;
    p.citizenship = static_cast<Citizenship>(draw_index(spec.citizenship, rng));
    p.moved_last_year = bernoulli(rng, spec.recent_mover_share);
    p.area = index;

    if (p.age < kAdultAge) {
        p.marital_status = MaritalStatus::SGL;
        if (p.age >= 4) {
            p.economic_status = EconomicStatus::S;
            p.education = level_below(studying_for_age(p.age));
        }
        return p;
    }

    const double tilt = spec.area_heterogeneity * area.deprivation;
    auto status = status_shares(p.age);
    for (auto s : {EconomicStatus::UNE, EconomicStatus::UTWSD, EconomicStatus::OTH}) {
        status[static_cast<std::size_t>(s)] *= std::exp(0.6 * tilt);
    }
    p.economic_status = static_cast<EconomicStatus>(draw_index(status, rng));

    std::array<double, 9> education{};
    for (std::size_t e = 0; e < education.size(); ++e) {
        const double level = static_cast<double>(e) - 4.0;
        const double age_shift = p.age >= 65 ? -0.25 : 0.0;
        education[e] = spec.education[e] * std::exp((-0.5 * tilt + age_shift) * level / 2.0);
    }
    p.education = static_cast<Education>(draw_index(education, rng) + 1);
    if (p.economic_status == EconomicStatus::S) {
        p.education = p.age < 18 ? Education::LS : std::max(p.education, Education::US);
    } else if (p.age < 21 && education_scale(p.education) > education_scale(Education::US)) {
        p.education = Education::US;
    }

    const double married = spec.married_share[married_band(p.age)];
    if (bernoulli(rng, married)) {
        p.marital_status = MaritalStatus::MAR;
    } else if (p.age >= 65) {
        p.marital_status = bernoulli(rng, 0.45) ? MaritalStatus::WID : MaritalStatus::SGL;
    } else if (p.age >= 35) {
        p.marital_status = bernoulli(rng, 0.2) ? MaritalStatus::SEP : MaritalStatus::SGL;
    } else {
        p.marital_status = MaritalStatus::SGL;
    }
    return p;
}

SrhCategory label(const OrdinalModel &model, const EncodingSchema &schema, const Individual &person,
                  const Geography &geography, RngEngine &rng) {
    return sample_from(predict_proba(model, encode(person, geography, schema)), rng);
}

/// Pairs married women and men of one pool by age rank; returns the leftovers.
void pair_by_age(std::vector<Individual> &people, std::vector<std::size_t> &women, std::vector<std::size_t> &men) {
    const auto by_age = [&](std::size_t a, std::size_t b) {
        return people[a].age != people[b].age ? people[a].age < people[b].age : people[a].id < people[b].id;
    };
    std::sort(women.begin(), women.end(), by_age);
    std::sort(men.begin(), men.end(), by_age);
    const auto pairs = std::min(women.size(), men.size());
    // Spread leftovers evenly over the age range instead of always dropping the oldest.
    std::vector<std::size_t> left_women, left_men;
    const auto take = [&](std::vector<std::size_t> &pool, std::vector<std::size_t> &left) {
        std::vector<std::size_t> kept;
        const auto extra = pool.size() - pairs;
        for (std::size_t i = 0, dropped = 0; i < pool.size(); ++i) {
            if (dropped < extra && (i + 1) * extra >= (dropped + 1) * pool.size()) {
                left.push_back(pool[i]);
                ++dropped;
            } else {
                kept.push_back(pool[i]);
            }
        }
        pool = std::move(kept);
    };
    take(women, left_women);
    take(men, left_men);
    for (std::size_t i = 0; i < pairs; ++i) {
        people[women[i]].spouse_id = people[men[i]].id;
        people[men[i]].spouse_id = people[women[i]].id;
    }
    women = std::move(left_women);
    men = std::move(left_men);
}

} // namespace

// ---------------------------------------------------------------------------------------------
// Spec

OrdinalModel default_truth_model() {
    const auto schema = EncodingSchema::standard();
    std::unordered_map<std::string, double> effects{
        {"sex=M", -0.05},
        {"marital_status=SGL", -0.10},
        {"marital_status=SEP", -0.35},
        {"marital_status=WID", -0.20},
        {"economic_status=S", 0.25},
        {"economic_status=LAHF", -0.30},
        {"economic_status=R", -0.60},
        {"economic_status=UTWSD", -2.40},
        {"economic_status=OTH", -0.80},
        {"economic_status=UNE", -0.70},
        {"education=P", 0.20},
        {"education=LS", 0.40},
        {"education=US", 0.60},
        {"education=PLC", 0.65},
        {"education=HC", 0.75},
        {"education=DEG", 0.90},
        {"education=PD", 1.00},
        {"education=D", 1.05},
        {"region=Munster", 0.05},
        {"region=Dublin", 0.10},
        {"region=Leinster Rest", 0.0},
    };
    const auto &banding = schema.banding();
    for (int band = 1; band < banding.band_count(); ++band) {
        effects["age_group=" + banding.label(band)] = -0.11 * band;
    }
    OrdinalModel model;
    const auto names = schema.feature_names();
    model.beta.resize(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        model.beta(static_cast<Eigen::Index>(i)) = effects.at(names[i]);
    }
    model.thresholds << 0.0, 1.6, 3.2, 4.6;
    model.link = Link::logit;
    model.schema_fingerprint = schema.fingerprint();
    return model;
}

GeneratorSpec GeneratorSpec::standard() {
    GeneratorSpec spec;
    spec.age_band_weights = default_age_weights();
    spec.truth = default_truth_model();
    return spec;
}

void GeneratorSpec::validate() const {
    const auto fail = [](const std::string &message) { throw Error{ErrorCode::infeasible_spec, message}; };
    if (counties == 0) {
        fail("at least one county is required");
    }
    if (min_area_size > max_area_size) {
        fail("min_area_size exceeds max_area_size");
    }
    if (!area_sizes.empty() && area_sizes.size() != areas) {
        fail(fmt::format("{} area sizes given for {} areas", area_sizes.size(), areas));
    }
    const auto &bands = age_band_weights.empty() ? default_age_weights() : age_band_weights;
    if (bands.size() != kAgeBands) {
        fail(fmt::format("age_band_weights needs {} entries", kAgeBands));
    }
    double total = 0.0;
    double adult = 0.0;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        if (!(bands[b] >= 0.0) || !std::isfinite(bands[b])) {
            fail("age_band_weights must be non-negative");
        }
        total += bands[b];
        adult += b >= 3 ? bands[b] : 0.0;
    }
    if (total <= 0.0 || adult <= 0.0) {
        fail("age_band_weights must give weight to adult ages");
    }
    require_probabilities(citizenship, "citizenship marginal");
    require_probabilities(education, "education marginal");
    for (double share : std::array{male_share, recent_mover_share}) {
        if (!(share >= 0.0 && share <= 1.0)) {
            fail("shares must lie in [0, 1]");
        }
    }
    for (double share : married_share) {
        if (!(share >= 0.0 && share <= 1.0)) {
            fail("married shares must lie in [0, 1]");
        }
    }
    if (!(area_heterogeneity >= 0.0) || !(census_noise >= 0.0)) {
        fail("area_heterogeneity and census_noise must be non-negative");
    }
    if (census_years.empty()) {
        fail("at least one census year is required");
    }
    const auto schema = EncodingSchema::standard();
    if (truth.beta.size() != static_cast<Eigen::Index>(schema.length())) {
        fail(fmt::format("truth model has {} coefficients; the standard encoding has {}", truth.beta.size(),
                         schema.length()));
    }
    truth.validate();
}

nlohmann::json GeneratorSpec::to_json() const {
    nlohmann::json doc;
    doc["seed"] = seed;
    doc["areas"] = areas;
    doc["counties"] = counties;
    doc["min_area_size"] = min_area_size;
    doc["max_area_size"] = max_area_size;
    doc["area_sizes"] = area_sizes;
    doc["age_band_weights"] = age_band_weights.empty() ? default_age_weights() : age_band_weights;
    doc["male_share"] = male_share;
    doc["citizenship"] = citizenship;
    doc["recent_mover_share"] = recent_mover_share;
    doc["married_share"] = married_share;
    doc["education"] = education;
    doc["area_heterogeneity"] = area_heterogeneity;
    doc["truth_model"] = truth.to_json();
    doc["survey_threshold_shift"] = survey_threshold_shift;
    doc["survey_size"] = survey_size;
    doc["base_year"] = base_year;
    doc["census_years"] = census_years;
    doc["census_drift"] = census_drift;
    doc["census_noise"] = census_noise;
    doc["facilities"] = facilities;
    return doc;
}

GeneratorSpec GeneratorSpec::from_json(const nlohmann::json &doc) {
    auto spec = standard();
    try {
        const auto read = [&](const char *key, auto &field) {
            if (doc.contains(key)) {
                doc.at(key).get_to(field);
            }
        };
        read("seed", spec.seed);
        read("areas", spec.areas);
        read("counties", spec.counties);
        read("min_area_size", spec.min_area_size);
        read("max_area_size", spec.max_area_size);
        read("area_sizes", spec.area_sizes);
        read("age_band_weights", spec.age_band_weights);
        read("male_share", spec.male_share);
        read("citizenship", spec.citizenship);
        read("recent_mover_share", spec.recent_mover_share);
        read("married_share", spec.married_share);
        read("education", spec.education);
        read("area_heterogeneity", spec.area_heterogeneity);
        if (doc.contains("truth_model")) {
            spec.truth = OrdinalModel::from_json(doc.at("truth_model"));
        }
        read("survey_threshold_shift", spec.survey_threshold_shift);
        read("survey_size", spec.survey_size);
        read("base_year", spec.base_year);
        read("census_years", spec.census_years);
        read("census_drift", spec.census_drift);
        read("census_noise", spec.census_noise);
        read("facilities", spec.facilities);
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::infeasible_spec, fmt::format("generator spec: {}", e.what())};
    }
    spec.validate();
    return spec;
}

GeneratorSpec GeneratorSpec::load(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw Error{ErrorCode::io, fmt::format("cannot open {}", path.string())};
    }
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error &e) {
        throw Error{ErrorCode::invalid_input, fmt::format("{}: {}", path.string(), e.what())};
    }
}

void GeneratorSpec::save(const std::filesystem::path &path) const {
    std::ofstream out{path};
    if (!out) {
        throw Error{ErrorCode::io, fmt::format("cannot write {}", path.string())};
    }
    out << to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------------------------
// Geography and people

std::vector<SyntheticArea> generate_areas(const GeneratorSpec &spec) {
    spec.validate();
    auto rng = substream(spec.seed, StreamTag::synthesis, {1});
    std::vector<SyntheticArea> out;
    out.reserve(spec.areas);
    for (std::size_t i = 0; i < spec.areas; ++i) {
        const auto county = i % spec.counties;
        const auto &nuts3 = kNuts3[county % kNuts3.size()];
        SyntheticArea area;
        area.area = {fmt::format("ED{:04d}", i + 1), fmt::format("County {:02d}", county + 1), nuts3.name,
                     nuts3.region};
        area.centroid = {51.5 + 3.8 * uniform01(rng), -10.3 + 4.3 * uniform01(rng)};
        area.deprivation = standard_normal(rng);
        out.push_back(std::move(area));
    }
    return out;
}

Geography make_geography(const std::vector<SyntheticArea> &areas) {
    std::vector<Area> list;
    list.reserve(areas.size());
    for (const auto &a : areas) {
        list.push_back(a.area);
    }
    return Geography{std::move(list)};
}

SyntheticPopulation generate_population(const GeneratorSpec &spec, const std::vector<SyntheticArea> &areas,
                                        const Geography &geography) {
    spec.validate();
    auto size_rng = substream(spec.seed, StreamTag::synthesis, {2});
    auto rng = substream(spec.seed, StreamTag::synthesis, {3});
    SyntheticPopulation out;
    PersonId next_id = 1;
    for (std::size_t a = 0; a < areas.size(); ++a) {
        const auto size = spec.area_sizes.empty()
                              ? spec.min_area_size + uniform_index(size_rng, spec.max_area_size - spec.min_area_size + 1)
                              : spec.area_sizes[a];
        for (std::size_t k = 0; k < size; ++k) {
            auto person = draw_person(spec, areas[a], static_cast<AreaIndex>(a), false, rng);
            person.id = next_id++;
            out.people.push_back(person);
        }
    }

    auto &people = out.people;
    const auto pools = [&](auto key_of) {
        std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
        for (std::size_t i = 0; i < people.size(); ++i) {
            const auto &p = people[i];
            if (p.marital_status == MaritalStatus::MAR && !p.spouse_id) {
                auto &[women, men] = groups[key_of(p)];
                (p.sex == Sex::F ? women : men).push_back(i);
            }
        }
        for (auto &[key, group] : groups) {
            pair_by_age(people, group.first, group.second);
        }
    };
    pools([](const Individual &p) { return static_cast<std::size_t>(p.area); });
    pools([&](const Individual &p) { return geography.county_of(p.area); });
    pools([](const Individual &) { return std::size_t{0}; });
    for (auto &p : people) {
        if (p.marital_status == MaritalStatus::MAR && !p.spouse_id) {
            if (spec.married_share[married_band(p.age)] >= 1.0) {
                throw Error{ErrorCode::infeasible_spec,
                            fmt::format("person {} must be married but no partner is left to pair with", p.id)};
            }
            p.marital_status = MaritalStatus::SGL;
        }
    }

    const auto schema = EncodingSchema::standard();
    auto label_rng = substream(spec.seed, StreamTag::synthesis, {4});
    for (const auto &p : people) {
        if (p.age >= kAdultAge) {
            out.srh.emplace(p.id, label(spec.truth, schema, p, geography, label_rng));
        }
    }
    return out;
}

std::vector<SurveyRecord> generate_survey(const GeneratorSpec &spec, const std::vector<SyntheticArea> &areas,
                                          const Geography &geography, std::size_t n) {
    spec.validate();
    std::vector<SurveyRecord> out;
    if (n == 0 || areas.empty()) {
        return out;
    }
    auto model = spec.truth;
    model.thresholds.array() += spec.survey_threshold_shift;
    const auto schema = EncodingSchema::standard();
    auto rng = substream(spec.seed, StreamTag::survey, {1});
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = uniform_index(rng, areas.size());
        auto person = draw_person(spec, areas[a], static_cast<AreaIndex>(a), true, rng);
        SurveyRecord record;
        record.person = encodable(person, geography);
        record.srh = sample_from(predict_proba(model, schema.encode(record.person)), rng);
        out.push_back(record);
    }
    return out;
}

CensusHistory generate_census_history(const GeneratorSpec &spec, const SyntheticPopulation &population,
                                      const Geography &geography, std::span<const int> years) {
    const auto schema = EncodingSchema::standard();
    const AgeBanding banding = schema.banding();
    std::map<CohortKey, std::pair<SrhDistribution, double>> sums;
    for (const auto &p : population.people) {
        if (p.age < kAdultAge) {
            continue;
        }
        const auto key = cohort_of(p, banding);
        auto &[sum, count] = sums[key];
        if (count == 0.0) {
            sum = SrhDistribution::Zero();
        }
        sum += predict_proba(spec.truth, encode(p, geography, schema));
        count += 1.0;
    }

    CensusHistory out;
    auto rng = substream(spec.seed, StreamTag::synthesis, {5});
    const AlrVector<double> drift = Eigen::Map<const AlrVector<double>>(spec.census_drift.data());
    for (const auto &[key, value] : sums) {
        const auto &[sum, count] = value;
        const AlrVector<double> base = alr(SrhDistribution{sum / count});
        for (int year : years) {
            AlrVector<double> y = base + drift * static_cast<double>(year - spec.base_year);
            if (year != spec.base_year) {
                for (int k = 0; k < kSrhCategories - 1; ++k) {
                    y(k) += spec.census_noise * standard_normal(rng);
                }
            }
            out.cohorts[key][year] = alr_inv(y);
            out.population[key][year] = count;
        }
    }
    for (int year : years) {
        SrhDistribution total = SrhDistribution::Zero();
        double weight = 0.0;
        for (const auto &[key, series] : out.cohorts) {
            const double n = out.population.at(key).at(year);
            total += n * series.at(year);
            weight += n;
        }
        if (weight > 0.0) {
            out.national[year] = total / weight;
        }
    }
    return out;
}

std::vector<std::pair<std::string, SrhDistribution>> reference_distributions(const SyntheticPopulation &population,
                                                                             const Geography &geography) {
    std::vector<SrhDistribution> counts(geography.size(), SrhDistribution::Zero());
    for (const auto &p : population.people) {
        if (const auto it = population.srh.find(p.id); it != population.srh.end()) {
            counts[p.area](static_cast<int>(it->second)) += 1.0;
        }
    }
    std::vector<std::pair<std::string, SrhDistribution>> out;
    for (std::size_t a = 0; a < counts.size(); ++a) {
        if (counts[a].sum() > 0.0) {
            out.emplace_back(geography.area(static_cast<AreaIndex>(a)).id, closure(counts[a]));
        }
    }
    return out;
}

std::vector<FacilitySite> generate_facilities(const GeneratorSpec &spec) {
    auto rng = substream(spec.seed, StreamTag::synthesis, {6});
    std::vector<FacilitySite> out;
    for (std::size_t i = 0; i < spec.facilities; ++i) {
        out.push_back({fmt::format("Facility {}", i + 1), {51.6 + 3.6 * uniform01(rng), -10.0 + 3.9 * uniform01(rng)}});
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Rate tables

namespace {

double peak(double age, double centre, double width) {
    const double z = (age - centre) / width;
    return std::exp(-z * z);
}

void set_row(RateTable &table, const std::vector<std::string> &prefix,
             const std::vector<std::pair<std::string, double>> &weights) {
    double total = 0.0;
    for (const auto &[label, w] : weights) {
        total += w;
    }
    for (const auto &[label, w] : weights) {
        if (w <= 0.0) {
            continue;
        }
        auto key = prefix;
        key.push_back(label);
        table.set(std::move(key), w / total);
    }
}

} // namespace

RateSet default_rates(const Geography &geography, const std::vector<Individual> &people) {
    RateSet rates;
    const auto counties = geography.counties().size();
    std::vector<double> county_size(counties, 0.0);
    std::vector<double> area_size(geography.size(), 0.0);
    for (const auto &p : people) {
        county_size[geography.county_of(p.area)] += 1.0;
        area_size[p.area] += 1.0;
    }

    for (int age = 0; age <= kMaxAge; ++age) {
        const double base = age == 0 ? 0.003 : 1e-4 + 2e-5 * std::exp(0.095 * age);
        const auto text = std::to_string(age);
        rates.mortality.set({text, "F", "*"}, age == kMaxAge ? 0.6 : std::min(0.6, base));
        rates.mortality.set({text, "M", "*"}, age == kMaxAge ? 0.6 : std::min(0.6, 1.25 * base));
        const double mobility = peak(age, 27.0, 10.0) + 0.05;
        rates.internal_profile.set({text, "*"}, mobility);
        rates.emigration_profile.set({text, "*"}, mobility);
        if (age >= 25 && age <= 69) {
            rates.returner_profile.set({text, "*"}, std::exp(-(age - 25) / 15.0));
        }
        if (age <= 80) {
            const double w = peak(age, 29.0, 9.0) + 0.15 * peak(age, 0.0, 8.0) + 0.02;
            const std::array<std::pair<const char *, double>, 4> shares{
                {{"IE", 0.30}, {"UK", 0.05}, {"EU", 0.30}, {"RW", 0.35}}};
            for (const auto &[cit, share] : shares) {
                rates.immigration_profile.set({text, "*", cit}, w * share);
            }
        }
    }

    for (std::size_t c = 0; c < counties; ++c) {
        const auto &from = geography.counties()[c];
        rates.internal_flows.set({from, from}, std::round(0.005 * county_size[c]));
        if (counties > 1) {
            rates.internal_flows.set({from, geography.counties()[(c + 1) % counties]}, std::round(0.01 * county_size[c]));
        }
    }
    rates.emigration_rate.set({"*"}, 0.012);
    for (std::size_t a = 0; a < geography.size(); ++a) {
        rates.immigration_destination.set({geography.area(static_cast<AreaIndex>(a)).id}, std::max(1.0, area_size[a]));
    }

    // Gaussian age profile scaled so the unweighted sum over ages equals the base-year TFR.
    const double tfr = TfrSchedule::standard().at(2022);
    double shape_total = 0.0;
    for (int age = 15; age <= 49; ++age) {
        shape_total += peak(age, 32.0, 5.5 * std::sqrt(2.0));
    }
    for (int age = 15; age <= 49; ++age) {
        const double f = tfr * peak(age, 32.0, 5.5 * std::sqrt(2.0)) / shape_total;
        for (auto status : all_categories<MaritalStatus>()) {
            const double factor = status == MaritalStatus::MAR ? 1.3 : 0.75;
            rates.fertility.set({std::to_string(age), "*", std::string{code(status)}}, std::min(1.0, f * factor));
        }
    }
    rates.marriage.set({"*"}, 0.05);
    rates.separation.set({}, 0.008);

    const std::array<std::pair<Education, double>, 7> dropout{{{Education::LS, 0.01},
                                                                {Education::US, 0.03},
                                                                {Education::PLC, 0.10},
                                                                {Education::HC, 0.08},
                                                                {Education::DEG, 0.05},
                                                                {Education::PD, 0.05},
                                                                {Education::D, 0.05}}};
    for (const auto &[level, p] : dropout) {
        rates.dropout.set({std::string{code(level)}}, p);
    }
    const std::array<std::pair<Education, double>, 8> years{{{Education::P, 8},
                                                              {Education::LS, 3},
                                                              {Education::US, 3},
                                                              {Education::PLC, 1},
                                                              {Education::HC, 2},
                                                              {Education::DEG, 3},
                                                              {Education::PD, 1},
                                                              {Education::D, 4}}};
    for (const auto &[level, y] : years) {
        rates.completion_time.set({std::string{code(level)}}, y);
    }

    const std::array<double, 9> target_base{0.01, 0.03, 0.06, 0.30, 0.12, 0.10, 0.24, 0.10, 0.04};
    for (auto parent : all_categories<Education>()) {
        std::vector<std::pair<std::string, double>> row;
        const double pull = parent == Education::NA ? 0.0 : 0.35 * (education_scale(parent) - 4.0);
        for (std::size_t t = 0; t < target_base.size(); ++t) {
            row.emplace_back(std::string{code(static_cast<Education>(t + 1))},
                             target_base[t] * std::exp(pull * (static_cast<double>(t) - 4.0) / 4.0));
        }
        set_row(rates.parental_transmission, {std::string{code(parent)}}, row);
    }
    rates.returner_rate.set({"*"}, 0.004);

    for (auto level : all_categories<Education>()) {
        const int s = education_scale(level);
        const double work = s <= 2 ? 0.45 : s == 3 ? 0.65 : s <= 5 ? 0.75 : 0.85;
        const double rest = 1.0 - work;
        set_row(rates.post_exit, {std::string{code(level)}},
                {{"W", work}, {"UNE", rest * 0.45}, {"OTH", rest * 0.25}, {"LAHF", rest * 0.30}});
    }

    const AgeBanding banding{};
    using S = EconomicStatus;
    for (int band = 0; band < banding.band_count(); ++band) {
        const int lower = banding.lower_bound(band);
        auto shares = status_shares(lower + 2);
        shares[static_cast<std::size_t>(S::S)] = 0.0;
        shares[static_cast<std::size_t>(S::NA)] = 0.0;
        const double total = std::accumulate(shares.begin(), shares.end(), 0.0);
        for (auto from : {S::NA, S::W, S::LAHF, S::R, S::UTWSD, S::OTH, S::UNE}) {
            double stay = 0.85;
            if (from == S::NA) {
                stay = 0.0;
            } else if (from == S::R) {
                stay = lower >= 65 ? 0.99 : 0.9;
            } else if (from == S::UTWSD) {
                stay = 0.9;
            } else if (from == S::W && lower >= 65) {
                stay = 0.7;
            }
            std::vector<std::pair<std::string, double>> row;
            for (auto to : {S::W, S::LAHF, S::R, S::UTWSD, S::OTH, S::UNE}) {
                const double p = (1.0 - stay) * shares[static_cast<std::size_t>(to)] / total + (to == from ? stay : 0.0);
                row.emplace_back(std::string{code(to)}, p);
            }
            set_row(rates.employment, {banding.label(band), "*", "*", "*", std::string{code(from)}}, row);
        }
    }
    return rates;
}

// ---------------------------------------------------------------------------------------------
// Bundle

void write_synthetic_bundle(const GeneratorSpec &spec, const std::filesystem::path &dir) {
    spec.validate();
    std::filesystem::create_directories(dir);
    const auto areas = generate_areas(spec);
    const auto geography = make_geography(areas);
    const auto population = generate_population(spec, areas, geography);

    geography.write_csv(dir / "geography.csv");
    std::vector<std::pair<std::string, GeoPoint>> centroids;
    for (const auto &a : areas) {
        centroids.emplace_back(a.area.id, a.centroid);
    }
    write_centroids(dir / "centroids.csv", centroids);
    write_facilities(dir / "facilities.csv", generate_facilities(spec));
    write_population(dir / "population.csv", population.people, geography);

    {
        CsvWriter truth{dir / "truth_srh.csv", {"id", "srh"}};
        for (const auto &[id, category] : population.srh) {
            truth.write_row({std::to_string(id), std::string{code(category)}});
        }
        truth.close();
    }
    {
        std::vector<std::string> header{"area_id"};
        header.insert(header.end(), kSrhColumns.begin(), kSrhColumns.end());
        CsvWriter reference{dir / "reference_areas.csv", header};
        for (const auto &[id, dist] : reference_distributions(population, geography)) {
            std::vector<std::string> row{id};
            for (int k = 0; k < kSrhCategories; ++k) {
                row.push_back(format_real(dist(k)));
            }
            reference.write_row(row);
        }
        reference.close();
    }

    write_survey(dir / "survey.csv", generate_survey(spec, areas, geography, spec.survey_size));
    write_census_history(dir / "census_history.csv",
                         generate_census_history(spec, population, geography, spec.census_years));
    spec.truth.save(dir / "truth_model.json");
    EncodingSchema::standard().save(dir / "encoding.json");
    spec.save(dir / "generator_spec.json");

    const auto rates = default_rates(geography, population.people);
    rates.save(dir / "rates");
    ScenarioConfig config;
    config.start_year = spec.base_year;
    config.end_year = std::max(spec.base_year, 2057);
    config.fertility_base_year = spec.base_year;
    config.net_migration_scale = static_cast<double>(population.people.size()) / kNationalPopulation;
    config.seed = spec.seed;
    config.rates_dir = "rates";
    config.save(dir / "scenario.json");
}

} // namespace srh
