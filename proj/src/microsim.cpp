#include "srh/microsim.hpp"

#include "srh/core/csv.hpp"
#include "srh/population_io.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace srh {

namespace {

constexpr std::size_t kEducationLevels = category_count<Education>;
constexpr std::size_t kStatuses = category_count<EconomicStatus>;
constexpr std::size_t kCitizenships = category_count<Citizenship>;
constexpr int kReturnerMinAge = 25;
constexpr int kReturnerMaxAge = 69;
constexpr int kSchoolEntryAge = 4;
constexpr double kRowTolerance = 1e-6;

std::size_t sex_index(Sex sex) { return static_cast<std::size_t>(sex); }

/// Marks people for removal and erases them keeping the id order.
void remove_marked(std::vector<Individual> &people, const std::vector<char> &marked) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (!marked[i]) {
            if (out != i) {
                people[out] = std::move(people[i]);
            }
            ++out;
        }
    }
    people.resize(out);
}

/// Picks min(k, candidates) distinct positions uniformly without replacement.
std::vector<std::size_t> uniform_sample(std::vector<std::size_t> candidates, std::size_t k, RngEngine &rng) {
    k = std::min(k, candidates.size());
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + uniform_index(rng, candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(k);
    return candidates;
}

/// Weighted sampling without replacement by exponential keys: each candidate gets
/// log(u) / w and the k largest keys win. Zero-weight candidates are never chosen. The result is
/// ordered by decreasing key, which is itself a random order.
template <typename WeightFn>
std::vector<std::size_t> weighted_sample(const std::vector<std::size_t> &candidates, std::size_t k,
                                         WeightFn &&weight, RngEngine &rng) {
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(candidates.size());
    for (auto index : candidates) {
        const double u = 1.0 - uniform01(rng);
        const double w = weight(index);
        if (w > 0.0) {
            keyed.emplace_back(std::log(u) / w, index);
        }
    }
    k = std::min(k, keyed.size());
    const auto by_key = [](const auto &a, const auto &b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    };
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end(), by_key);
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = keyed[i].second;
    }
    return out;
}

std::size_t draw_cumulative(const std::vector<double> &cumulative, RngEngine &rng) {
    const double u = uniform01(rng) * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

long round_count(double value) { return std::lround(value); }

bool is_adult(int age) { return age >= kAdultAge; }

void clear_schooling(Individual &person) {
    person.studying.reset();
    person.graduation_year.reset();
}

/// Brings a copied record in line with the invariants for its (possibly different) age.
void normalize_for_age(Individual &person, int year) {
    if (!is_adult(person.age)) {
        person.marital_status = MaritalStatus::SGL;
        person.spouse_id.reset();
        if (person.economic_status != EconomicStatus::S || person.age < kSchoolEntryAge) {
            person.economic_status = EconomicStatus::NA;
            clear_schooling(person);
        }
        if (person.age < kSchoolEntryAge) {
            person.education = Education::NA;
        }
    }
    if (person.economic_status == EconomicStatus::S) {
        if (!person.studying) {
            person.studying = next_level(person.education, Education::D).value_or(Education::D);
        }
        if (!person.graduation_year || *person.graduation_year <= year) {
            person.graduation_year = year + 1;
        }
    } else {
        clear_schooling(person);
    }
}

} // namespace

// ---------------------------------------------------------------------------------------------
// State and accounts

std::optional<std::size_t> PopulationState::index_of(PersonId id) const {
    const auto it = std::lower_bound(people.begin(), people.end(), id,
                                     [](const Individual &p, PersonId value) { return p.id < value; });
    if (it == people.end() || it->id != id) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - people.begin());
}

std::vector<std::vector<std::size_t>> PopulationState::area_members(std::size_t areas) const {
    std::vector<std::vector<std::size_t>> out(areas);
    for (std::size_t i = 0; i < people.size(); ++i) {
        out.at(people[i].area).push_back(i);
    }
    return out;
}

void write_accounts(const std::filesystem::path &path, const std::vector<YearAccount> &accounts,
                    const Geography &geography) {
    CsvWriter out{path,
                  {"year", "population_start", "births", "deaths", "emigrants", "immigrants",
                   "net_international", "internal_moves", "net_internal_by_county", "separations",
                   "marriages", "graduations", "dropouts", "returners", "population_end"}};
    for (const auto &a : accounts) {
        std::string by_county;
        for (std::size_t c = 0; c < a.net_internal_by_county.size(); ++c) {
            if (c > 0) {
                by_county += ';';
            }
            by_county += geography.counties().at(c) + ":" + format_real(a.net_internal_by_county[c]);
        }
        out.write_row({std::to_string(a.year), format_real(a.population_start), format_real(a.births),
                       format_real(a.deaths), format_real(a.emigrants), format_real(a.immigrants),
                       format_real(a.net_international), format_real(a.internal_moves), by_county,
                       format_real(a.separations), format_real(a.marriages), format_real(a.graduations),
                       format_real(a.dropouts), format_real(a.returners), format_real(a.population_end)});
    }
    out.close();
}

std::vector<YearAccount> average_accounts(const std::vector<std::vector<YearAccount>> &runs) {
    if (runs.empty()) {
        return {};
    }
    std::vector<YearAccount> mean = runs.front();
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].size() != mean.size()) {
            throw Error{ErrorCode::invalid_input, "runs cover different numbers of years"};
        }
        for (std::size_t t = 0; t < mean.size(); ++t) {
            const auto &a = runs[r][t];
            auto &m = mean[t];
            if (a.year != m.year || a.net_internal_by_county.size() != m.net_internal_by_county.size()) {
                throw Error{ErrorCode::invalid_input, "runs cover different years or counties"};
            }
            m.population_start += a.population_start;
            m.deaths += a.deaths;
            m.births += a.births;
            m.emigrants += a.emigrants;
            m.immigrants += a.immigrants;
            m.net_international += a.net_international;
            m.internal_moves += a.internal_moves;
            for (std::size_t c = 0; c < m.net_internal_by_county.size(); ++c) {
                m.net_internal_by_county[c] += a.net_internal_by_county[c];
            }
            m.separations += a.separations;
            m.marriages += a.marriages;
            m.graduations += a.graduations;
            m.dropouts += a.dropouts;
            m.returners += a.returners;
            m.population_end += a.population_end;
        }
    }
    const double n = static_cast<double>(runs.size());
    for (auto &m : mean) {
        for (double *field : {&m.population_start, &m.deaths, &m.births, &m.emigrants, &m.immigrants,
                              &m.net_international, &m.internal_moves, &m.separations, &m.marriages,
                              &m.graduations, &m.dropouts, &m.returners, &m.population_end}) {
            *field /= n;
        }
        for (auto &v : m.net_internal_by_county) {
            v /= n;
        }
    }
    return mean;
}

// ---------------------------------------------------------------------------------------------
// Education progression

std::optional<Education> next_level(Education attained, Education target) {
    if (education_scale(target) <= education_scale(attained)) {
        return std::nullopt;
    }
    switch (attained) {
    case Education::NA:
    case Education::NF:
        return Education::P;
    case Education::P:
        return Education::LS;
    case Education::LS:
        return Education::US;
    case Education::US:
        return education_scale(target) >= education_scale(Education::PD) ? Education::DEG : target;
    case Education::PLC:
        return target == Education::HC ? Education::HC : Education::DEG;
    case Education::HC:
        return Education::DEG;
    case Education::DEG:
        return Education::PD;
    case Education::PD:
        return target == Education::D ? std::optional{Education::D} : std::nullopt;
    case Education::D:
        return std::nullopt;
    }
    return std::nullopt;
}

Education level_below(Education level) {
    switch (level) {
    case Education::NA:
    case Education::NF:
    case Education::P:
        return Education::NF;
    case Education::LS:
        return Education::P;
    case Education::US:
        return Education::LS;
    case Education::PLC:
    case Education::HC:
    case Education::DEG:
        return Education::US;
    case Education::PD:
        return Education::DEG;
    case Education::D:
        return Education::PD;
    }
    return Education::NF;
}

// ---------------------------------------------------------------------------------------------
// Simulation setup

namespace {

template <typename E>
std::vector<std::pair<std::uint8_t, double>> compile_category_row(const RateTable &table,
                                                                  const std::vector<std::string> &prefix) {
    const auto row = table.row(prefix);
    std::vector<std::pair<std::uint8_t, double>> out;
    if (row.empty()) {
        return out;
    }
    double total = 0.0;
    for (const auto &[label, value] : row) {
        total += value;
        out.emplace_back(static_cast<std::uint8_t>(parse_category<E>(label)), total);
    }
    if (std::abs(total - 1.0) > kRowTolerance) {
        throw Error{ErrorCode::row_not_stochastic,
                    fmt::format("{} row ({}) sums to {}", table.name(), fmt::join(prefix, ", "), total)};
    }
    return out;
}

template <typename E>
E draw_category(const std::vector<std::pair<std::uint8_t, double>> &row, RngEngine &rng) {
    const double u = uniform01(rng) * row.back().second;
    for (const auto &[category, cumulative] : row) {
        if (u < cumulative) {
            return static_cast<E>(category);
        }
    }
    return static_cast<E>(row.back().first);
}

} // namespace

Simulation::Simulation(const ScenarioConfig &config, const Geography &geography, const RateSet &rates, int run)
    : config_(config), geography_(geography), rates_(rates), run_(run) {
    config_.validate();
    if (geography_.size() == 0) {
        throw Error{ErrorCode::invalid_config, "geography has no areas"};
    }

    for (const auto &[key, value] : rates_.mortality.entries()) {
        if (key.at(2) != RateTable::kWildcard) {
            mortality_years_.push_back(parse_int(key[2], "mortality year"));
        }
    }
    std::sort(mortality_years_.begin(), mortality_years_.end());
    mortality_years_.erase(std::unique(mortality_years_.begin(), mortality_years_.end()), mortality_years_.end());

    internal_profile_ = age_sex_weights(rates_.internal_profile);
    emigration_profile_ = age_sex_weights(rates_.emigration_profile);
    returner_profile_ = age_sex_weights(rates_.returner_profile);

    const auto &regions = geography_.nuts3_regions();
    const auto per_region = [&](const RateTable &table) {
        std::vector<double> out(regions.size(), 0.0);
        if (table.empty()) {
            return out;
        }
        for (std::size_t r = 0; r < regions.size(); ++r) {
            out[r] = table.lookup({regions[r]});
        }
        return out;
    };
    emigration_rate_ = per_region(rates_.emigration_rate);
    marriage_rate_ = per_region(rates_.marriage);
    returner_rate_ = per_region(rates_.returner_rate);
    separation_ratio_ = rates_.separation.empty() ? 0.0 : rates_.separation.lookup(std::span<const std::string>{});

    immigration_cells_.assign(kAges * 2 * kCitizenships, 0.0);
    for (std::size_t age = 0; age < kAges; ++age) {
        for (auto sex : all_categories<Sex>()) {
            for (auto cit : all_categories<Citizenship>()) {
                const std::vector<std::string> key{std::to_string(age), std::string{code(sex)},
                                                   std::string{code(cit)}};
                immigration_cells_[(age * 2 + sex_index(sex)) * kCitizenships + static_cast<std::size_t>(cit)] =
                    rates_.immigration_profile.find(key).value_or(0.0);
            }
        }
    }

    destination_.cumulative.resize(geography_.size());
    for (std::size_t a = 0; a < geography_.size(); ++a) {
        const std::vector<std::string> key{geography_.area(static_cast<AreaIndex>(a)).id};
        const double w = rates_.immigration_destination.empty()
                             ? 1.0
                             : rates_.immigration_destination.find(key).value_or(0.0);
        destination_.total += w;
        destination_.cumulative[a] = destination_.total;
    }

    const int fertile_ages = config_.max_fertility_age - config_.min_fertility_age + 1;
    fertility_.assign(static_cast<std::size_t>(fertile_ages) * regions.size() * category_count<MaritalStatus>, 0.0);
    if (!rates_.fertility.empty()) {
        for (int age = config_.min_fertility_age; age <= config_.max_fertility_age; ++age) {
            for (std::size_t r = 0; r < regions.size(); ++r) {
                for (auto status : all_categories<MaritalStatus>()) {
                    const auto slot = (static_cast<std::size_t>(age - config_.min_fertility_age) * regions.size() + r) *
                                          category_count<MaritalStatus> +
                                      static_cast<std::size_t>(status);
                    fertility_[slot] =
                        rates_.fertility.lookup({std::to_string(age), regions[r], std::string{code(status)}});
                }
            }
        }
    }

    for (auto level : all_categories<Education>()) {
        const std::vector<std::string> key{std::string{code(level)}};
        const auto i = static_cast<std::size_t>(level);
        dropout_[i] = rates_.dropout.find(key).value_or(0.0);
        const auto years = rates_.completion_time.find(key);
        completion_[i] = years ? std::max(1, static_cast<int>(std::lround(*years))) : 0;
        transmission_[i] = compile_category_row<Education>(rates_.parental_transmission, key);
        post_exit_[i] = compile_category_row<EconomicStatus>(rates_.post_exit, key);
    }

    for (const auto &[key, movers] : rates_.internal_flows.entries()) {
        const auto from = geography_.county_index(key.at(0));
        const auto to = geography_.county_index(key.at(1));
        if (!from || !to) {
            throw Error{ErrorCode::missing_flow,
                        fmt::format("internal flow {} -> {} names a county outside the geography", key[0], key[1])};
        }
        flows_.push_back({*from, *to, round_count(movers)});
    }

    employment_cache_.resize(static_cast<std::size_t>(AgeBanding{}.band_count()) * 2 * kCitizenships *
                             kEducationLevels * kStatuses);
}

RngEngine Simulation::stream(StreamTag tag, int year) const {
    return substream(config_.seed, tag, {static_cast<std::uint64_t>(run_), static_cast<std::uint64_t>(year)});
}

Simulation::AgeSexTable Simulation::age_sex_weights(const RateTable &table) const {
    AgeSexTable out{};
    for (std::size_t age = 0; age < kAges; ++age) {
        for (auto sex : all_categories<Sex>()) {
            const std::vector<std::string> key{std::to_string(age), std::string{code(sex)}};
            out[sex_index(sex) * kAges + age] = table.find(key).value_or(0.0);
        }
    }
    return out;
}

const Simulation::AgeSexTable &Simulation::mortality_for(int year) const {
    int table_year = year;
    if (!mortality_years_.empty()) {
        const auto it = std::upper_bound(mortality_years_.begin(), mortality_years_.end(), year);
        table_year = it == mortality_years_.begin() ? mortality_years_.front() : *std::prev(it);
    }
    for (const auto &[cached_year, table] : mortality_cache_) {
        if (cached_year == table_year) {
            return table;
        }
    }
    if (rates_.mortality.empty()) {
        throw Error{ErrorCode::missing_table, "mortality table is empty"};
    }
    AgeSexTable table{};
    const auto year_text = std::to_string(table_year);
    for (std::size_t age = 0; age < kAges; ++age) {
        for (auto sex : all_categories<Sex>()) {
            table[sex_index(sex) * kAges + age] =
                rates_.mortality.lookup({std::to_string(age), std::string{code(sex)}, year_text});
        }
    }
    mortality_cache_.emplace_back(table_year, table);
    return mortality_cache_.back().second;
}

std::array<double, kStatuses> Simulation::employment_row(const Individual &person) const {
    const AgeBanding banding{};
    const auto band = static_cast<std::size_t>(banding.band_index(person.age));
    const auto from = static_cast<std::size_t>(person.economic_status);
    const auto slot = (((band * 2 + sex_index(person.sex)) * kCitizenships +
                        static_cast<std::size_t>(person.citizenship)) *
                           kEducationLevels +
                       static_cast<std::size_t>(person.education)) *
                          kStatuses +
                      from;
    auto &cached = employment_cache_.at(slot);
    if (cached) {
        return *cached;
    }
    const std::vector<std::string> prefix{banding.label(static_cast<int>(band)), std::string{code(person.sex)},
                                          std::string{code(person.citizenship)},
                                          std::string{code(person.education)},
                                          std::string{code(person.economic_status)}};
    const auto row = rates_.employment.row(prefix);
    if (row.empty()) {
        throw Error{ErrorCode::missing_rate,
                    fmt::format("employment has no transitions for ({})", fmt::join(prefix, ", "))};
    }
    std::array<double, kStatuses> probabilities{};
    double total = 0.0;
    for (const auto &[label, value] : row) {
        const auto to = parse_category<EconomicStatus>(label);
        if (to == EconomicStatus::S || to == EconomicStatus::NA) {
            throw Error{ErrorCode::invalid_rate,
                        fmt::format("employment transition into {} for ({})", label, fmt::join(prefix, ", "))};
        }
        probabilities[static_cast<std::size_t>(to)] += value;
        total += value;
    }
    if (std::abs(total - 1.0) > kRowTolerance) {
        throw Error{ErrorCode::row_not_stochastic,
                    fmt::format("employment row ({}) sums to {}", fmt::join(prefix, ", "), total)};
    }
    cached = probabilities;
    return probabilities;
}

Education Simulation::sample_target(std::optional<Education> parent, RngEngine &rng) const {
    const auto &row = transmission_[static_cast<std::size_t>(parent.value_or(Education::NA))];
    if (row.empty()) {
        throw Error{rates_.parental_transmission.empty() ? ErrorCode::missing_table : ErrorCode::missing_rate,
                    fmt::format("parental_transmission has no row for parent education {}",
                                code(parent.value_or(Education::NA)))};
    }
    return draw_category<Education>(row, rng);
}

EconomicStatus Simulation::sample_post_exit(Education level, RngEngine &rng) const {
    const auto &row = post_exit_[static_cast<std::size_t>(level)];
    if (row.empty()) {
        throw Error{rates_.post_exit.empty() ? ErrorCode::missing_table : ErrorCode::missing_rate,
                    fmt::format("post_exit has no row for level {}", code(level))};
    }
    const auto status = draw_category<EconomicStatus>(row, rng);
    if (status == EconomicStatus::S || status == EconomicStatus::NA) {
        throw Error{ErrorCode::invalid_rate, fmt::format("post_exit row for {} leads to {}", code(level), code(status))};
    }
    return status;
}

int Simulation::completion_years(Education level) const {
    const int years = completion_[static_cast<std::size_t>(level)];
    if (years == 0) {
        throw Error{rates_.completion_time.empty() ? ErrorCode::missing_table : ErrorCode::missing_rate,
                    fmt::format("completion_time has no entry for {}", code(level))};
    }
    return years;
}

void Simulation::leave_education(Individual &person, RngEngine &rng) const {
    clear_schooling(person);
    person.economic_status = is_adult(person.age) ? sample_post_exit(person.education, rng) : EconomicStatus::NA;
}

void Simulation::enrol(Individual &person, Education level, int year) const {
    person.economic_status = EconomicStatus::S;
    person.studying = level;
    person.graduation_year = year + completion_years(level);
}

void Simulation::match_couples(std::vector<Individual> &people, std::vector<std::size_t> women,
                               std::vector<std::size_t> men, std::size_t pairs, RngEngine &rng) const {
    pairs = std::min({pairs, women.size(), men.size()});
    if (pairs == 0) {
        return;
    }
    women = uniform_sample(std::move(women), pairs, rng);
    men = uniform_sample(std::move(men), men.size(), rng);

    constexpr std::size_t kLevels = 9;
    std::vector<std::vector<std::size_t>> buckets(kAges * kLevels);
    for (auto m : men) {
        const auto &man = people[m];
        buckets[static_cast<std::size_t>(man.age) * kLevels + static_cast<std::size_t>(education_scale(man.education))]
            .push_back(m);
    }
    const double lambda = config_.marriage_education_weight;

    for (auto w : women) {
        const auto &woman = people[w];
        const int age = woman.age;
        const int edu = education_scale(woman.education);
        double best_cost = std::numeric_limits<double>::infinity();
        std::size_t best = buckets.size();
        for (int d = 0; d <= kMaxAge && d < best_cost; ++d) {
            for (int side = 0; side < (d == 0 ? 1 : 2); ++side) {
                const int candidate_age = side == 0 ? age - d : age + d;
                if (candidate_age < 0 || candidate_age > kMaxAge) {
                    continue;
                }
                for (std::size_t level = 0; level < kLevels; ++level) {
                    const auto b = static_cast<std::size_t>(candidate_age) * kLevels + level;
                    if (buckets[b].empty()) {
                        continue;
                    }
                    const double cost = d + lambda * std::abs(static_cast<int>(level) - edu);
                    if (cost < best_cost) {
                        best_cost = cost;
                        best = b;
                    }
                }
            }
        }
        const auto m = buckets[best].back();
        buckets[best].pop_back();
        people[w].marital_status = MaritalStatus::MAR;
        people[m].marital_status = MaritalStatus::MAR;
        people[w].spouse_id = people[m].id;
        people[m].spouse_id = people[w].id;
    }
}

// ---------------------------------------------------------------------------------------------
// Initialization

PopulationState Simulation::initialize(std::vector<Individual> base) const {
    std::sort(base.begin(), base.end(), [](const Individual &a, const Individual &b) { return a.id < b.id; });
    validate_population(base);

    PopulationState state;
    state.year = config_.start_year;
    state.people = std::move(base);
    state.next_id = state.people.empty() ? 1 : state.people.back().id + 1;
    auto &people = state.people;
    auto rng = stream(StreamTag::initialisation, config_.start_year);

    const auto unlinked = [&](Sex sex, std::optional<std::size_t> region) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < people.size(); ++i) {
            const auto &p = people[i];
            if (p.marital_status == MaritalStatus::MAR && !p.spouse_id && p.sex == sex &&
                (!region || geography_.nuts3_of(p.area) == *region)) {
                out.push_back(i);
            }
        }
        return out;
    };
    for (std::size_t r = 0; r < geography_.nuts3_regions().size(); ++r) {
        auto women = unlinked(Sex::F, r);
        auto men = unlinked(Sex::M, r);
        const auto pairs = std::min(women.size(), men.size());
        match_couples(people, std::move(women), std::move(men), pairs, rng);
    }
    {
        auto women = unlinked(Sex::F, std::nullopt);
        auto men = unlinked(Sex::M, std::nullopt);
        const auto pairs = std::min(women.size(), men.size());
        match_couples(people, std::move(women), std::move(men), pairs, rng);
        const auto left = unlinked(Sex::F, std::nullopt).size() + unlinked(Sex::M, std::nullopt).size();
        if (left > 0) {
            spdlog::warn("OddMarriedCount: {} married individuals have no spouse in the population and stay "
                         "married without a link",
                         left);
        }
    }

    for (auto &p : people) {
        if (p.economic_status == EconomicStatus::S) {
            if (!p.studying) {
                if (p.age < 12) {
                    p.studying = Education::P;
                } else if (p.age < 15) {
                    p.studying = Education::LS;
                } else if (p.age < 18 || education_scale(p.education) < education_scale(Education::US)) {
                    p.studying = Education::US;
                } else {
                    p.studying = next_level(p.education, Education::D).value_or(Education::D);
                }
                p.education = level_below(*p.studying);
            }
            if (!p.graduation_year || *p.graduation_year <= state.year) {
                const auto span = static_cast<std::size_t>(completion_years(*p.studying));
                p.graduation_year = state.year + 1 + static_cast<int>(uniform_index(rng, span));
            }
        }
        if (!p.lifetime_target && (!is_adult(p.age) || p.studying)) {
            auto target = sample_target(p.parent_education, rng);
            if (p.studying && education_scale(target) < education_scale(*p.studying)) {
                target = *p.studying;
            }
            p.lifetime_target = target;
        }
    }
    return state;
}

// ---------------------------------------------------------------------------------------------
// Annual steps

void Simulation::step_mortality(PopulationState &state, YearAccount &account) const {
    auto rng = stream(StreamTag::mortality, state.year);
    const auto &q = mortality_for(state.year);
    auto &people = state.people;
    std::vector<char> dead(people.size(), 0);
    for (std::size_t i = 0; i < people.size(); ++i) {
        const auto &p = people[i];
        dead[i] = bernoulli(rng, q[sex_index(p.sex) * kAges + static_cast<std::size_t>(p.age)]) ? 1 : 0;
    }
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (dead[i] && people[i].spouse_id) {
            if (const auto s = state.index_of(*people[i].spouse_id); s && !dead[*s]) {
                people[*s].marital_status = MaritalStatus::WID;
                people[*s].spouse_id.reset();
            }
        }
    }
    const auto before = people.size();
    remove_marked(people, dead);
    account.deaths += static_cast<double>(before - people.size());
    for (auto &p : people) {
        p.age = std::min(p.age + 1, kMaxAge);
    }
}

void Simulation::step_internal_migration(PopulationState &state, YearAccount &account) const {
    if (flows_.empty()) {
        return;
    }
    auto rng = stream(StreamTag::internal_migration, state.year);
    auto &people = state.people;
    const auto counties = geography_.counties().size();
    account.net_internal_by_county.resize(counties, 0.0);

    std::vector<std::vector<std::size_t>> members(counties);
    for (std::size_t i = 0; i < people.size(); ++i) {
        members[geography_.county_of(people[i].area)].push_back(i);
    }
    for (std::size_t from = 0; from < counties; ++from) {
        long outflow = 0;
        for (const auto &flow : flows_) {
            if (flow.from == from) {
                outflow += flow.movers;
            }
        }
        if (outflow <= 0) {
            continue;
        }
        const auto movers = weighted_sample(
            members[from], static_cast<std::size_t>(outflow),
            [&](std::size_t i) { return internal_profile_[sex_index(people[i].sex) * kAges + people[i].age]; }, rng);
        if (movers.size() < static_cast<std::size_t>(outflow)) {
            spdlog::warn("{} internal movers requested from {} but only {} residents can move", outflow,
                         geography_.counties()[from], movers.size());
        }
        std::size_t next = 0;
        for (const auto &flow : flows_) {
            if (flow.from != from) {
                continue;
            }
            const auto &areas = geography_.areas_in_county(flow.to);
            for (long k = 0; k < flow.movers && next < movers.size(); ++k) {
                auto &person = people[movers[next++]];
                if (flow.to == from && areas.size() > 1) {
                    auto pick = uniform_index(rng, areas.size() - 1);
                    const auto current = std::find(areas.begin(), areas.end(), person.area);
                    if (current != areas.end() && pick >= static_cast<std::size_t>(current - areas.begin())) {
                        ++pick;
                    }
                    person.area = areas[pick];
                } else {
                    person.area = areas[uniform_index(rng, areas.size())];
                }
                account.internal_moves += 1;
                account.net_internal_by_county[from] -= 1;
                account.net_internal_by_county[flow.to] += 1;
            }
        }
    }
}

void Simulation::step_international_migration(PopulationState &state, YearAccount &account) const {
    auto emigration_rng = stream(StreamTag::emigration, state.year);
    auto immigration_rng = stream(StreamTag::immigration, state.year);
    auto &people = state.people;

    std::vector<Individual> donors;
    for (auto &p : people) {
        if (p.moved_last_year) {
            donors.push_back(p);
            p.moved_last_year = false;
        }
    }

    const auto regions = geography_.nuts3_regions().size();
    std::vector<std::vector<std::size_t>> members(regions);
    for (std::size_t i = 0; i < people.size(); ++i) {
        members[geography_.nuts3_of(people[i].area)].push_back(i);
    }
    std::vector<char> leaving(people.size(), 0);
    long emigrants = 0;
    for (std::size_t r = 0; r < regions; ++r) {
        const auto wanted = round_count(emigration_rate_[r] * static_cast<double>(members[r].size()));
        if (wanted <= 0) {
            continue;
        }
        const auto chosen = weighted_sample(
            members[r], static_cast<std::size_t>(wanted),
            [&](std::size_t i) { return emigration_profile_[sex_index(people[i].sex) * kAges + people[i].age]; },
            emigration_rng);
        for (auto i : chosen) {
            leaving[i] = 1;
        }
        emigrants += static_cast<long>(chosen.size());
    }

    const long net = config_.net_migration(state.year);
    const long immigrants = emigrants + net;
    if (immigrants < 0) {
        throw Error{ErrorCode::invalid_config,
                    fmt::format("net migration {} in {} exceeds the {} emigrants available to offset it", net,
                                state.year, emigrants)};
    }

    for (std::size_t i = 0; i < people.size(); ++i) {
        if (leaving[i] && people[i].spouse_id) {
            if (const auto s = state.index_of(*people[i].spouse_id); s && !leaving[*s]) {
                people[*s].spouse_id.reset();
            }
        }
    }
    remove_marked(people, leaving);
    if (donors.empty() && immigrants > 0) {
        spdlog::info("no recent movers to copy in {}; immigrants copy the whole population", state.year);
        donors = people;
    }
    place_immigrants(state, std::move(donors), immigrants, immigration_rng);

    account.emigrants += static_cast<double>(emigrants);
    account.immigrants += static_cast<double>(immigrants);
    account.net_international += static_cast<double>(immigrants - emigrants);
}

void Simulation::place_immigrants(PopulationState &state, std::vector<Individual> donors, long count,
                                  RngEngine &rng) const {
    if (count <= 0) {
        return;
    }
    std::vector<double> cells(immigration_cells_.size());
    std::partial_sum(immigration_cells_.begin(), immigration_cells_.end(), cells.begin());
    if (cells.back() <= 0.0) {
        throw Error{ErrorCode::missing_profile_cell, "immigration_profile has no positive weight"};
    }
    if (destination_.total <= 0.0) {
        throw Error{ErrorCode::missing_profile_cell, "immigration_destination has no positive weight"};
    }
    if (donors.empty()) {
        throw Error{ErrorCode::missing_profile_cell, "no individuals available to describe immigrants"};
    }

    std::vector<std::vector<std::uint32_t>> by_cell(immigration_cells_.size());
    for (std::size_t d = 0; d < donors.size(); ++d) {
        const auto &p = donors[d];
        by_cell[(static_cast<std::size_t>(p.age) * 2 + sex_index(p.sex)) * kCitizenships +
                static_cast<std::size_t>(p.citizenship)]
            .push_back(static_cast<std::uint32_t>(d));
    }
    const auto cell_donors = [&](int age, std::size_t sex, std::size_t cit) -> const std::vector<std::uint32_t> & {
        return by_cell[(static_cast<std::size_t>(age) * 2 + sex) * kCitizenships + cit];
    };
    // Nearest age on the same side of adulthood, optionally pooling sexes and citizenships.
    const auto nearest = [&](int age, std::size_t sex, std::size_t cit, bool any_sex,
                             bool any_cit) -> std::optional<std::uint32_t> {
        for (int d = 0; d <= kMaxAge; ++d) {
            for (int side = 0; side < (d == 0 ? 1 : 2); ++side) {
                const int a = side == 0 ? age - d : age + d;
                if (a < 0 || a > kMaxAge || is_adult(a) != is_adult(age)) {
                    continue;
                }
                std::vector<std::uint32_t> pool;
                for (std::size_t s = 0; s < 2; ++s) {
                    for (std::size_t c = 0; c < kCitizenships; ++c) {
                        if ((any_sex || s == sex) && (any_cit || c == cit)) {
                            const auto &list = cell_donors(a, s, c);
                            pool.insert(pool.end(), list.begin(), list.end());
                        }
                    }
                }
                if (!pool.empty()) {
                    return pool[uniform_index(rng, pool.size())];
                }
            }
        }
        return std::nullopt;
    };

    long fallbacks = 0;
    state.people.reserve(state.people.size() + static_cast<std::size_t>(count));
    for (long k = 0; k < count; ++k) {
        const auto cell = draw_cumulative(cells, rng);
        const auto cit = cell % kCitizenships;
        const auto sex = (cell / kCitizenships) % 2;
        const auto age = static_cast<int>(cell / (kCitizenships * 2));

        std::optional<std::uint32_t> donor;
        if (const auto &exact = cell_donors(age, sex, cit); !exact.empty()) {
            donor = exact[uniform_index(rng, exact.size())];
        } else {
            ++fallbacks;
            donor = nearest(age, sex, cit, false, false);
            if (!donor) {
                donor = nearest(age, sex, cit, false, true);
            }
            if (!donor) {
                donor = nearest(age, sex, cit, true, true);
            }
            if (!donor) {
                donor = static_cast<std::uint32_t>(uniform_index(rng, donors.size()));
            }
        }

        Individual person = donors[*donor];
        person.id = state.next_id++;
        person.age = age;
        person.sex = static_cast<Sex>(sex);
        person.citizenship = static_cast<Citizenship>(cit);
        person.moved_last_year = true;
        person.spouse_id.reset();
        person.area = static_cast<AreaIndex>(draw_cumulative(destination_.cumulative, rng));
        normalize_for_age(person, state.year);
        state.people.push_back(std::move(person));
    }
    if (fallbacks > 0) {
        spdlog::info("{}: {} of {} immigrants copied a donor from a neighbouring age cell", state.year, fallbacks,
                     count);
    }
}

void Simulation::step_fertility(PopulationState &state, YearAccount &account) const {
    auto rng = stream(StreamTag::fertility, state.year);
    const double scale = config_.fertility_scale(state.year);
    const auto regions = geography_.nuts3_regions().size();
    auto &people = state.people;
    std::vector<Individual> newborns;
    for (const auto &mother : people) {
        if (mother.sex != Sex::F || mother.age < config_.min_fertility_age || mother.age > config_.max_fertility_age) {
            continue;
        }
        const auto slot =
            (static_cast<std::size_t>(mother.age - config_.min_fertility_age) * regions + geography_.nuts3_of(mother.area)) *
                category_count<MaritalStatus> +
            static_cast<std::size_t>(mother.marital_status);
        if (!bernoulli(rng, std::min(1.0, fertility_[slot] * scale))) {
            continue;
        }
        Individual child;
        child.id = state.next_id++;
        child.age = 0;
        child.sex = bernoulli(rng, config_.male_birth_probability) ? Sex::M : Sex::F;
        child.marital_status = MaritalStatus::SGL;
        child.citizenship = Citizenship::IE;
        child.area = mother.area;
        Education parent = mother.education;
        if (mother.spouse_id) {
            if (const auto s = state.index_of(*mother.spouse_id);
                s && education_scale(people[*s].education) > education_scale(parent)) {
                parent = people[*s].education;
            }
        }
        child.parent_education = parent;
        newborns.push_back(std::move(child));
    }
    account.births += static_cast<double>(newborns.size());
    people.insert(people.end(), std::make_move_iterator(newborns.begin()), std::make_move_iterator(newborns.end()));
}

void Simulation::step_marriage(PopulationState &state, YearAccount &account) const {
    auto rng = stream(StreamTag::marriage, state.year);
    auto &people = state.people;

    std::vector<std::size_t> couples;
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (people[i].spouse_id && *people[i].spouse_id > people[i].id) {
            couples.push_back(i);
        }
    }
    std::vector<char> separated(people.size(), 0);
    const auto splits = round_count(separation_ratio_ * static_cast<double>(couples.size()));
    for (auto i : uniform_sample(std::move(couples), static_cast<std::size_t>(std::max(0L, splits)), rng)) {
        const auto s = state.index_of(*people[i].spouse_id).value();
        for (auto j : {i, s}) {
            people[j].marital_status = MaritalStatus::SEP;
            people[j].spouse_id.reset();
            separated[j] = 1;
        }
        account.separations += 1;
    }

    const auto regions = geography_.nuts3_regions().size();
    std::vector<std::vector<std::size_t>> women(regions), men(regions);
    for (std::size_t i = 0; i < people.size(); ++i) {
        const auto &p = people[i];
        if (p.age >= config_.min_marriage_age && p.marital_status != MaritalStatus::MAR && !separated[i]) {
            (p.sex == Sex::F ? women : men)[geography_.nuts3_of(p.area)].push_back(i);
        }
    }
    for (std::size_t r = 0; r < regions; ++r) {
        const auto eligible = static_cast<double>(women[r].size() + men[r].size());
        auto target = static_cast<std::size_t>(std::max(0L, round_count(marriage_rate_[r] * eligible / 2.0)));
        const auto possible = std::min(women[r].size(), men[r].size());
        if (target > possible) {
            spdlog::debug("{}: {} marriages wanted in {} but only {} couples possible", state.year, target,
                          geography_.nuts3_regions()[r], possible);
            target = possible;
        }
        match_couples(people, std::move(women[r]), std::move(men[r]), target, rng);
        account.marriages += static_cast<double>(target);
    }
}

void Simulation::step_education(PopulationState &state, YearAccount &account) const {
    auto rng = stream(StreamTag::education, state.year);
    const int year = state.year;
    auto &people = state.people;
    std::vector<char> changed(people.size(), 0);

    for (auto &p : people) {
        if (p.age == 0 && !p.lifetime_target) {
            p.lifetime_target = sample_target(p.parent_education, rng);
        }
    }

    std::array<std::vector<std::size_t>, kEducationLevels> students;
    for (std::size_t i = 0; i < people.size(); ++i) {
        const auto &p = people[i];
        if (p.economic_status == EconomicStatus::S && p.studying) {
            students[static_cast<std::size_t>(*p.studying)].push_back(i);
        }
    }
    for (std::size_t level = 0; level < kEducationLevels; ++level) {
        auto &group = students[level];
        const auto dropouts = round_count(dropout_[level] * static_cast<double>(group.size()));
        if (dropouts <= 0) {
            continue;
        }
        auto order = uniform_sample(group, group.size(), rng);
        std::stable_partition(order.begin(), order.end(), [&](std::size_t i) {
            const auto &p = people[i];
            return education_scale(p.lifetime_target.value_or(Education::NF)) <=
                   education_scale(static_cast<Education>(level));
        });
        order.resize(std::min(order.size(), static_cast<std::size_t>(dropouts)));
        for (auto i : order) {
            leave_education(people[i], rng);
            changed[i] = 1;
        }
        account.dropouts += static_cast<double>(order.size());
    }

    for (std::size_t i = 0; i < people.size(); ++i) {
        auto &p = people[i];
        if (changed[i] || p.economic_status != EconomicStatus::S || !p.studying || !p.graduation_year ||
            *p.graduation_year > year) {
            continue;
        }
        p.education = *p.studying;
        account.graduations += 1;
        changed[i] = 1;
        if (const auto next = next_level(p.education, p.lifetime_target.value_or(p.education))) {
            enrol(p, *next, year);
        } else {
            leave_education(p, rng);
        }
    }

    for (std::size_t i = 0; i < people.size(); ++i) {
        auto &p = people[i];
        if (p.age != kSchoolEntryAge || p.economic_status != EconomicStatus::NA || p.studying) {
            continue;
        }
        if (!p.lifetime_target) {
            p.lifetime_target = sample_target(p.parent_education, rng);
        }
        p.education = Education::NF;
        if (education_scale(*p.lifetime_target) > education_scale(Education::NF)) {
            enrol(p, Education::P, year);
        }
        changed[i] = 1;
    }

    const auto regions = geography_.nuts3_regions().size();
    std::vector<std::vector<std::size_t>> eligible(regions);
    for (std::size_t i = 0; i < people.size(); ++i) {
        const auto &p = people[i];
        if (!changed[i] && p.age >= kReturnerMinAge && p.age <= kReturnerMaxAge &&
            p.economic_status != EconomicStatus::S && next_level(p.education, Education::D)) {
            eligible[geography_.nuts3_of(p.area)].push_back(i);
        }
    }
    for (std::size_t r = 0; r < regions; ++r) {
        const auto wanted = round_count(returner_rate_[r] * static_cast<double>(eligible[r].size()));
        if (wanted <= 0) {
            continue;
        }
        const auto chosen = weighted_sample(
            eligible[r], static_cast<std::size_t>(wanted),
            [&](std::size_t i) { return returner_profile_[sex_index(people[i].sex) * kAges + people[i].age]; }, rng);
        for (auto i : chosen) {
            auto &p = people[i];
            if (p.education == Education::NA) {
                p.education = Education::NF;
            }
            const auto level = next_level(p.education, Education::D).value();
            p.lifetime_target = level;
            enrol(p, level, year);
        }
        account.returners += static_cast<double>(chosen.size());
    }
}

void Simulation::step_employment(PopulationState &state, YearAccount &) const {
    auto rng = stream(StreamTag::employment, state.year);
    for (auto &p : state.people) {
        if (!is_adult(p.age) || p.economic_status == EconomicStatus::S) {
            continue;
        }
        const auto row = employment_row(p);
        const double u = uniform01(rng);
        double cumulative = 0.0;
        std::size_t to = kStatuses;
        std::size_t last_positive = kStatuses;
        for (std::size_t s = 0; s < kStatuses; ++s) {
            if (row[s] <= 0.0) {
                continue;
            }
            last_positive = s;
            cumulative += row[s];
            if (u < cumulative) {
                to = s;
                break;
            }
        }
        p.economic_status = static_cast<EconomicStatus>(to == kStatuses ? last_positive : to);
    }
}

YearAccount Simulation::step_year(PopulationState &state) const {
    YearAccount account;
    state.year += 1;
    account.year = state.year;
    account.population_start = static_cast<double>(state.people.size());
    account.net_internal_by_county.assign(geography_.counties().size(), 0.0);

    step_mortality(state, account);
    step_internal_migration(state, account);
    step_international_migration(state, account);
    step_fertility(state, account);
    step_marriage(state, account);
    step_education(state, account);
    step_employment(state, account);

    account.population_end = static_cast<double>(state.people.size());
    const double expected = account.population_start - account.deaths + account.births - account.emigrants +
                            account.immigrants;
    const double internal = std::accumulate(account.net_internal_by_county.begin(),
                                            account.net_internal_by_county.end(), 0.0);
    if (expected != account.population_end || internal != 0.0) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("population accounting does not balance in {}: {} expected, {} present", state.year,
                                expected, account.population_end)};
    }
    return account;
}

std::vector<YearAccount> Simulation::run(PopulationState &state, const Observer &observer) const {
    std::vector<YearAccount> accounts;
    if (observer) {
        observer(state);
    }
    while (state.year < config_.end_year) {
        accounts.push_back(step_year(state));
        spdlog::debug("run {} year {}: {} people", run_, state.year, state.people.size());
        if (observer) {
            observer(state);
        }
    }
    return accounts;
}

} // namespace srh
