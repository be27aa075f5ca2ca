#include <doctest.h>

#include "srh/core/csv.hpp"
#include "srh/microsim.hpp"
#include "srh/population_io.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

using namespace srh;

namespace {

// Two counties: A (areas a1, a2, region N1) and B (area b1, region N2).
Geography test_geography() {
    return Geography{{{"a1", "A", "N1", Region::dublin},
                      {"a2", "A", "N1", Region::dublin},
                      {"b1", "B", "N2", Region::munster}}};
}

// Every module switched off: nobody dies, moves, marries or gives birth and everyone works.
RateSet quiet_rates() {
    RateSet rates;
    rates.mortality.set({"*", "*", "*"}, 0.0);
    rates.internal_profile.set({"*", "*"}, 1.0);
    rates.emigration_rate.set({"*"}, 0.0);
    rates.emigration_profile.set({"*", "*"}, 1.0);
    rates.immigration_profile.set({"*", "*", "*"}, 1.0);
    rates.fertility.set({"*", "*", "*"}, 0.0);
    rates.marriage.set({"*"}, 0.0);
    rates.separation.set({}, 0.0);
    for (auto [level, years] : std::initializer_list<std::pair<const char *, double>>{
             {"P", 8}, {"LS", 3}, {"US", 3}, {"PLC", 1}, {"HC", 2}, {"DEG", 3}, {"PD", 1}, {"D", 4}}) {
        rates.completion_time.set({level}, years);
    }
    rates.parental_transmission.set({"*", "US"}, 1.0);
    rates.returner_rate.set({"*"}, 0.0);
    rates.returner_profile.set({"*", "*"}, 1.0);
    rates.post_exit.set({"*", "W"}, 1.0);
    rates.employment.set({"*", "*", "*", "*", "*", "W"}, 1.0);
    return rates;
}

ScenarioConfig test_config() {
    ScenarioConfig config;
    config.start_year = 2022;
    config.end_year = 2030;
    config.net_migration_scale = 0.0;
    config.seed = 99;
    return config;
}

Individual person(PersonId id, int age, Sex sex, AreaIndex area = 0,
                  EconomicStatus status = EconomicStatus::W, MaritalStatus marital = MaritalStatus::SGL) {
    Individual p;
    p.id = id;
    p.age = age;
    p.sex = sex;
    p.area = area;
    p.marital_status = marital;
    if (age >= kAdultAge) {
        p.economic_status = status;
        p.education = Education::US;
    }
    return p;
}

void marry(std::vector<Individual> &people, std::size_t a, std::size_t b) {
    people[a].marital_status = MaritalStatus::MAR;
    people[b].marital_status = MaritalStatus::MAR;
    people[a].spouse_id = people[b].id;
    people[b].spouse_id = people[a].id;
}

std::vector<Individual> adults(int count, AreaIndex areas = 3) {
    std::vector<Individual> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(person(i + 1, 20 + i % 50, i % 2 == 0 ? Sex::F : Sex::M, static_cast<AreaIndex>(i % areas)));
    }
    return out;
}

PopulationState state_of(std::vector<Individual> people, int year) {
    PopulationState state;
    state.year = year;
    state.next_id = people.empty() ? 1 : people.back().id + 1;
    state.people = std::move(people);
    return state;
}

std::map<std::string, long> county_counts(const PopulationState &state, const Geography &geo) {
    std::map<std::string, long> out;
    for (const auto &p : state.people) {
        ++out[geo.counties()[geo.county_of(p.area)]];
    }
    return out;
}

YearAccount blank_account(const Geography &geo) {
    YearAccount account;
    account.net_internal_by_county.assign(geo.counties().size(), 0.0);
    return account;
}

} // namespace

TEST_CASE("net migration follows each scenario's anchors with equal annual steps") {
    CHECK(net_migration_target(MigrationScenario::M1, 2023) == 75'000);
    CHECK(net_migration_target(MigrationScenario::M1, 2022) == 75'000);
    CHECK(net_migration_target(MigrationScenario::M1, 2024) == 75'000 - 30'000 / 4);
    CHECK(net_migration_target(MigrationScenario::M1, 2027) == 45'000);
    CHECK(net_migration_target(MigrationScenario::M1, 2050) == 45'000);
    CHECK(net_migration_target(MigrationScenario::M2, 2028) == 75'000 - 45'000 * 5 / 9);
    CHECK(net_migration_target(MigrationScenario::M2, 2032) == 30'000);
    CHECK(net_migration_target(MigrationScenario::M3, 2027) == 25'000);
    CHECK(net_migration_target(MigrationScenario::M3, 2030) == 25'000 - 15'000 * 3 / 5);
    CHECK(net_migration_target(MigrationScenario::M3, 2040) == 10'000);
    CHECK_THROWS_AS(parse_migration_scenario("M4"), Error);
}

TEST_CASE("TFR schedule interpolates and scales fertility relative to the base year") {
    const auto tfr = TfrSchedule::standard();
    CHECK(tfr.at(2022) == doctest::Approx(1.55).epsilon(1e-12));
    CHECK(tfr.at(2030) == doctest::Approx(1.55 + (1.3 - 1.55) * 8.0 / 16.0).epsilon(1e-12));
    CHECK(tfr.at(2038) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(tfr.at(2050) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(tfr.at(2000) == doctest::Approx(1.55).epsilon(1e-12));
    ScenarioConfig config;
    CHECK(config.fertility_scale(2038) == doctest::Approx(1.3 / 1.55).epsilon(1e-12));
    config.net_migration_scale = 0.1;
    CHECK(config.net_migration(2027) == 4'500);
}

TEST_CASE("scenario config rejects horizons beyond fifty years and round-trips through JSON") {
    auto config = test_config();
    config.end_year = config.start_year + 51;
    CHECK_THROWS_AS(config.validate(), Error);
    config.end_year = config.start_year;
    CHECK_NOTHROW(config.validate());

    config = test_config();
    config.migration_scenario = MigrationScenario::M3;
    const auto back = ScenarioConfig::from_json(config.to_json());
    CHECK(back.to_json() == config.to_json());
}

TEST_CASE("next education level follows the progression ladder") {
    CHECK(next_level(Education::NF, Education::US) == Education::P);
    CHECK(next_level(Education::NA, Education::P) == Education::P);
    CHECK(next_level(Education::LS, Education::DEG) == Education::US);
    CHECK(next_level(Education::US, Education::PLC) == Education::PLC);
    CHECK(next_level(Education::US, Education::HC) == Education::HC);
    CHECK(next_level(Education::US, Education::D) == Education::DEG);
    CHECK(next_level(Education::PLC, Education::DEG) == Education::DEG);
    CHECK(next_level(Education::HC, Education::PD) == Education::DEG);
    CHECK(next_level(Education::DEG, Education::PD) == Education::PD);
    CHECK(next_level(Education::PD, Education::D) == Education::D);
    CHECK_FALSE(next_level(Education::DEG, Education::DEG).has_value());
    CHECK_FALSE(next_level(Education::DEG, Education::US).has_value());
    CHECK(level_below(Education::US) == Education::LS);
    CHECK(level_below(Education::P) == Education::NF);
    CHECK(level_below(Education::DEG) == Education::US);
}

TEST_CASE("initialization links married people and sets up students") {
    const auto geo = test_geography();
    const auto rates = quiet_rates();
    const auto config = test_config();
    Simulation sim{config, geo, rates};

    std::vector<Individual> base;
    base.push_back(person(1, 40, Sex::F, 0, EconomicStatus::W, MaritalStatus::MAR));
    base.push_back(person(2, 42, Sex::M, 1, EconomicStatus::W, MaritalStatus::MAR));
    base.push_back(person(3, 30, Sex::F, 2, EconomicStatus::W, MaritalStatus::MAR));
    base.push_back(person(4, 31, Sex::M, 2, EconomicStatus::W, MaritalStatus::MAR));
    base.push_back(person(5, 55, Sex::M, 2, EconomicStatus::W, MaritalStatus::MAR));
    base.push_back(person(6, 16, Sex::M, 0, EconomicStatus::S));
    base.push_back(person(7, 8, Sex::F, 1));
    base.back().economic_status = EconomicStatus::S;

    testing::WarningCounter warnings;
    const auto state = sim.initialize(base);
    CHECK(warnings.count() == 1);

    const auto &p = state.people;
    CHECK(p[0].spouse_id == 2);
    CHECK(p[1].spouse_id == 1);
    CHECK(p[2].spouse_id == 4);
    CHECK(p[3].spouse_id == 3);
    CHECK_FALSE(p[4].spouse_id.has_value());
    CHECK(p[4].marital_status == MaritalStatus::MAR);

    CHECK(p[5].studying == Education::US);
    CHECK(p[5].education == Education::LS);
    REQUIRE(p[5].graduation_year.has_value());
    CHECK(*p[5].graduation_year >= 2023);
    CHECK(*p[5].graduation_year <= 2025);
    CHECK(p[6].studying == Education::P);
    CHECK(p[6].education == Education::NF);
    CHECK(p[6].lifetime_target == Education::US);
    CHECK(state.next_id == 8);
}

TEST_CASE("mortality with certain death removes everyone and widows survivors") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.mortality = RateTable{"mortality", {"age", "sex", "year"}, RateKind::probability};
    rates.mortality.set({"*", "M", "*"}, 1.0);
    rates.mortality.set({"*", "F", "*"}, 0.0);
    Simulation sim{test_config(), geo, rates};

    auto people = adults(10);
    marry(people, 0, 1);
    people[2].age = kMaxAge;
    auto state = state_of(people, 2023);
    auto account = blank_account(geo);
    sim.step_mortality(state, account);

    CHECK(account.deaths == 5);
    REQUIRE(state.people.size() == 5);
    for (const auto &p : state.people) {
        CHECK(p.sex == Sex::F);
    }
    CHECK(state.people[0].marital_status == MaritalStatus::WID);
    CHECK_FALSE(state.people[0].spouse_id.has_value());
    CHECK(state.people[0].age == 21);
    CHECK(state.people[1].age == kMaxAge);
}

TEST_CASE("mortality deaths are binomial in the death probability") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.mortality = RateTable{"mortality", {"age", "sex", "year"}, RateKind::probability};
    rates.mortality.set({"*", "*", "*"}, 0.1);
    Simulation sim{test_config(), geo, rates};

    auto state = state_of(adults(20'000), 2023);
    auto account = blank_account(geo);
    sim.step_mortality(state, account);
    const double sd = std::sqrt(20'000 * 0.1 * 0.9);
    CHECK(std::abs(account.deaths - 2'000.0) < 4 * sd);
}

TEST_CASE("mortality uses the latest table year not after the simulated year") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.mortality = RateTable{"mortality", {"age", "sex", "year"}, RateKind::probability};
    rates.mortality.set({"*", "*", "2022"}, 0.0);
    rates.mortality.set({"*", "*", "2030"}, 1.0);
    Simulation sim{test_config(), geo, rates};

    auto early = state_of(adults(50), 2029);
    auto account = blank_account(geo);
    sim.step_mortality(early, account);
    CHECK(account.deaths == 0);

    auto late = state_of(adults(50), 2031);
    sim.step_mortality(late, account);
    CHECK(account.deaths == 50);
}

TEST_CASE("internal migration moves exactly the tabulated flows") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.internal_flows.set({"A", "B"}, 30);
    rates.internal_flows.set({"B", "A"}, 10);
    rates.internal_flows.set({"A", "A"}, 5);
    Simulation sim{test_config(), geo, rates};

    auto state = state_of(adults(300), 2023);
    const auto before = county_counts(state, geo);
    const auto areas_before = state.people;
    auto account = blank_account(geo);
    sim.step_internal_migration(state, account);
    const auto after = county_counts(state, geo);

    CHECK(account.internal_moves == 45);
    CHECK(account.net_internal_by_county[0] == -20);
    CHECK(account.net_internal_by_county[1] == 20);
    CHECK(after.at("A") == before.at("A") - 20);
    CHECK(after.at("B") == before.at("B") + 20);
    CHECK(state.people.size() == 300);

    long changed_area = 0;
    for (std::size_t i = 0; i < state.people.size(); ++i) {
        changed_area += state.people[i].area != areas_before[i].area ? 1 : 0;
    }
    CHECK(changed_area == 45);
}

TEST_CASE("internal flows naming unknown counties are rejected") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.internal_flows.set({"A", "Z"}, 3);
    try {
        Simulation sim{test_config(), geo, rates};
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::missing_flow);
    }
}

TEST_CASE("international migration meets the net target exactly") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.emigration_rate = RateTable{"emigration_rate", {"nuts3"}, RateKind::probability};
    rates.emigration_rate.set({"*"}, 0.05);
    rates.immigration_destination.set({"b1"}, 1.0);
    auto config = test_config();
    config.net_migration_scale = 0.001;
    Simulation sim{config, geo, rates};

    auto people = adults(2'000);
    marry(people, 0, 1);
    people[5].moved_last_year = true;
    auto state = state_of(people, 2024);
    auto account = blank_account(geo);
    sim.step_international_migration(state, account);

    const long net = config.net_migration(2024);
    CHECK(net == 68);
    CHECK(account.emigrants == 100);
    CHECK(account.immigrants - account.emigrants == net);
    CHECK(state.people.size() == static_cast<std::size_t>(2'000 + net));
    long flagged = 0;
    for (const auto &p : state.people) {
        if (p.moved_last_year) {
            ++flagged;
            CHECK(geo.area(p.area).id == "b1");
            CHECK_FALSE(p.spouse_id.has_value());
        }
    }
    CHECK(flagged == account.immigrants);
    validate_population(state.people);
    CHECK(std::is_sorted(state.people.begin(), state.people.end(),
                         [](const Individual &a, const Individual &b) { return a.id < b.id; }));
}

TEST_CASE("fertility draws births for women of childbearing age") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.fertility = RateTable{"fertility", {"age", "nuts3", "marital_status"}, RateKind::probability};
    rates.fertility.set({"*", "*", "*"}, 1.0);
    auto config = test_config();
    Simulation sim{config, geo, rates};

    std::vector<Individual> people;
    people.push_back(person(1, 30, Sex::F, 1));
    people.push_back(person(2, 33, Sex::M, 1));
    people.push_back(person(3, 50, Sex::F, 0));
    people.push_back(person(4, 14, Sex::F, 0));
    people.push_back(person(5, 15, Sex::F, 2));
    marry(people, 0, 1);
    people[0].education = Education::LS;
    people[1].education = Education::DEG;
    auto state = state_of(people, 2022);
    auto account = blank_account(geo);
    sim.step_fertility(state, account);

    CHECK(account.births == 2);
    REQUIRE(state.people.size() == 7);
    const auto &baby = state.people[5];
    CHECK(baby.id == 6);
    CHECK(baby.age == 0);
    CHECK(baby.area == 1);
    CHECK(baby.parent_education == Education::DEG);
    CHECK(baby.economic_status == EconomicStatus::NA);
    CHECK(baby.marital_status == MaritalStatus::SGL);
    CHECK(state.people[6].area == 2);
}

TEST_CASE("fertility scales with the TFR schedule") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.fertility = RateTable{"fertility", {"age", "nuts3", "marital_status"}, RateKind::probability};
    rates.fertility.set({"*", "*", "*"}, 0.5);
    Simulation sim{test_config(), geo, rates};

    std::vector<Individual> women;
    for (int i = 0; i < 20'000; ++i) {
        women.push_back(person(i + 1, 20 + i % 25, Sex::F, static_cast<AreaIndex>(i % 3)));
    }
    auto state = state_of(women, 2038);
    auto account = blank_account(geo);
    sim.step_fertility(state, account);
    const double p = 0.5 * 1.3 / 1.55;
    CHECK(std::abs(account.births - 20'000 * p) < 4 * std::sqrt(20'000 * p * (1 - p)));
}

TEST_CASE("marriage matches nearest partners and caps at the available pairs") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.marriage = RateTable{"marriage", {"nuts3"}, RateKind::probability};
    rates.marriage.set({"*"}, 1.0);
    Simulation sim{test_config(), geo, rates};

    std::vector<Individual> people;
    people.push_back(person(1, 30, Sex::F, 2));
    people.push_back(person(2, 30, Sex::M, 2));
    people.push_back(person(3, 33, Sex::M, 2));
    people[1].education = Education::DEG; // cost 0 + 2 * 3 = 6
    people[2].education = Education::US;  // cost 3 + 0 = 3
    auto state = state_of(people, 2023);
    auto account = blank_account(geo);
    sim.step_marriage(state, account);

    CHECK(account.marriages == 1);
    CHECK(state.people[0].spouse_id == 3);
    CHECK(state.people[2].spouse_id == 1);
    CHECK(state.people[1].marital_status == MaritalStatus::SGL);
    validate_population(state.people);
}

TEST_CASE("separation splits the tabulated share of couples") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.separation = RateTable{"separation", {}, RateKind::probability};
    rates.separation.set({}, 0.5);
    Simulation sim{test_config(), geo, rates};

    auto people = adults(20);
    for (std::size_t i = 0; i < 20; i += 2) {
        marry(people, i, i + 1);
    }
    auto state = state_of(people, 2023);
    auto account = blank_account(geo);
    sim.step_marriage(state, account);
    CHECK(account.separations == 5);
    const auto separated = std::count_if(state.people.begin(), state.people.end(),
                                         [](const Individual &p) { return p.marital_status == MaritalStatus::SEP; });
    CHECK(separated == 10);
    validate_population(state.people);
}

TEST_CASE("education graduates, continues, drops out and enrols school starters") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.dropout.set({"DEG"}, 1.0);
    Simulation sim{test_config(), geo, rates};

    std::vector<Individual> people;
    auto continuing = person(1, 14, Sex::F, 0, EconomicStatus::NA);
    continuing.economic_status = EconomicStatus::S;
    continuing.education = Education::P;
    continuing.studying = Education::LS;
    continuing.graduation_year = 2025;
    continuing.lifetime_target = Education::DEG;
    people.push_back(continuing);

    auto finishing = person(2, 18, Sex::M, 0, EconomicStatus::S);
    finishing.education = Education::LS;
    finishing.studying = Education::US;
    finishing.graduation_year = 2025;
    finishing.lifetime_target = Education::US;
    people.push_back(finishing);

    auto dropping = person(3, 20, Sex::M, 0, EconomicStatus::S);
    dropping.studying = Education::DEG;
    dropping.graduation_year = 2027;
    dropping.lifetime_target = Education::DEG;
    people.push_back(dropping);

    auto starter = person(4, 4, Sex::F, 1);
    starter.lifetime_target = Education::LS;
    people.push_back(starter);

    auto state = state_of(people, 2025);
    auto account = blank_account(geo);
    sim.step_education(state, account);
    const auto &p = state.people;

    CHECK(p[0].education == Education::LS);
    CHECK(p[0].studying == Education::US);
    CHECK(p[0].graduation_year == 2028);
    CHECK(p[0].economic_status == EconomicStatus::S);

    CHECK(p[1].education == Education::US);
    CHECK(p[1].economic_status == EconomicStatus::W);
    CHECK_FALSE(p[1].studying.has_value());

    CHECK(p[2].education == Education::US);
    CHECK(p[2].economic_status == EconomicStatus::W);
    CHECK_FALSE(p[2].graduation_year.has_value());

    CHECK(p[3].economic_status == EconomicStatus::S);
    CHECK(p[3].studying == Education::P);
    CHECK(p[3].education == Education::NF);
    CHECK(p[3].graduation_year == 2033);

    CHECK(account.graduations == 2);
    CHECK(account.dropouts == 1);
    validate_population(state.people);
}

TEST_CASE("returners re-enrol at the next level") {
    const auto geo = test_geography();
    auto rates = quiet_rates();
    rates.returner_rate = RateTable{"returner_rate", {"nuts3"}, RateKind::probability};
    rates.returner_rate.set({"*"}, 0.1);
    Simulation sim{test_config(), geo, rates};

    auto state = state_of(adults(1'000), 2023);
    std::size_t eligible = 0;
    for (const auto &p : state.people) {
        eligible += p.age >= 25 && p.age <= 69 ? 1 : 0;
    }
    auto account = blank_account(geo);
    sim.step_education(state, account);
    // Rounding happens per region; both regions hold a share of the eligible people.
    CHECK(std::abs(account.returners - 0.1 * static_cast<double>(eligible)) <= 1.0);
    for (const auto &p : state.people) {
        if (p.economic_status == EconomicStatus::S) {
            CHECK(p.studying == Education::DEG);
            CHECK(p.age >= 25);
        }
    }
}

TEST_CASE("employment transitions: identity, deterministic and stationary") {
    const auto geo = test_geography();
    auto people = adults(300);
    people[3].economic_status = EconomicStatus::UNE;
    people[4].economic_status = EconomicStatus::R;
    people[5].economic_status = EconomicStatus::S;
    people[5].studying = Education::DEG;
    people[5].graduation_year = 2030;
    people.push_back(person(301, 10, Sex::F));

    SUBCASE("identity table keeps every status") {
        auto rates = quiet_rates();
        rates.employment = RateTable{"employment", rates.employment.dimensions(), RateKind::probability};
        for (auto s : {"W", "UNE", "R", "LAHF", "UTWSD", "OTH"}) {
            rates.employment.set({"*", "*", "*", "*", s, s}, 1.0);
        }
        Simulation sim{test_config(), geo, rates};
        auto state = state_of(people, 2023);
        auto account = blank_account(geo);
        sim.step_employment(state, account);
        CHECK(state.people == people);
    }

    SUBCASE("a single destination moves all non-students there") {
        auto rates = quiet_rates();
        rates.employment = RateTable{"employment", rates.employment.dimensions(), RateKind::probability};
        rates.employment.set({"*", "*", "*", "*", "*", "R"}, 1.0);
        Simulation sim{test_config(), geo, rates};
        auto state = state_of(people, 2023);
        auto account = blank_account(geo);
        sim.step_employment(state, account);
        for (const auto &p : state.people) {
            if (p.id == 6) {
                CHECK(p.economic_status == EconomicStatus::S);
            } else if (p.id == 301) {
                CHECK(p.economic_status == EconomicStatus::NA);
            } else {
                CHECK(p.economic_status == EconomicStatus::R);
            }
        }
    }

    SUBCASE("rows that do not sum to one are rejected") {
        auto rates = quiet_rates();
        rates.employment = RateTable{"employment", rates.employment.dimensions(), RateKind::probability};
        rates.employment.set({"*", "*", "*", "*", "*", "W"}, 0.9);
        Simulation sim{test_config(), geo, rates};
        auto state = state_of(people, 2023);
        auto account = blank_account(geo);
        try {
            sim.step_employment(state, account);
            FAIL("expected an error");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::row_not_stochastic);
        }
    }

    SUBCASE("a two-state chain settles at its stationary distribution") {
        auto rates = quiet_rates();
        rates.employment = RateTable{"employment", rates.employment.dimensions(), RateKind::probability};
        rates.employment.set({"*", "*", "*", "*", "W", "W"}, 0.9);
        rates.employment.set({"*", "*", "*", "*", "W", "UNE"}, 0.1);
        rates.employment.set({"*", "*", "*", "*", "UNE", "W"}, 0.3);
        rates.employment.set({"*", "*", "*", "*", "UNE", "UNE"}, 0.7);
        auto config = test_config();
        Simulation sim{config, geo, rates};

        // Oracle: left eigenvector of the transition matrix for eigenvalue 1.
        Eigen::Matrix2d transition;
        transition << 0.9, 0.1, 0.3, 0.7;
        Eigen::EigenSolver<Eigen::Matrix2d> solver(transition.transpose());
        Eigen::Index unit = 0;
        (solver.eigenvalues().real().array() - 1.0).abs().minCoeff(&unit);
        Eigen::Vector2d pi = solver.eigenvectors().col(unit).real();
        pi /= pi.sum();

        std::vector<Individual> pool;
        for (int i = 0; i < 20'000; ++i) {
            pool.push_back(person(i + 1, 30, Sex::F, 0, EconomicStatus::UNE));
        }
        auto state = state_of(pool, 2023);
        auto account = blank_account(geo);
        for (int t = 0; t < 40; ++t) {
            ++state.year;
            sim.step_employment(state, account);
        }
        const auto working = std::count_if(state.people.begin(), state.people.end(),
                                           [](const Individual &p) { return p.economic_status == EconomicStatus::W; });
        CHECK(static_cast<double>(working) / 20'000.0 == doctest::Approx(pi(0)).epsilon(0.02));
    }
}

namespace {

RateSet busy_rates() {
    auto rates = quiet_rates();
    rates.mortality = RateTable{"mortality", {"age", "sex", "year"}, RateKind::probability};
    rates.mortality.set({"*", "*", "*"}, 0.01);
    rates.internal_flows.set({"A", "B"}, 20);
    rates.internal_flows.set({"B", "A"}, 15);
    rates.emigration_rate = RateTable{"emigration_rate", {"nuts3"}, RateKind::probability};
    rates.emigration_rate.set({"*"}, 0.01);
    rates.fertility = RateTable{"fertility", {"age", "nuts3", "marital_status"}, RateKind::probability};
    rates.fertility.set({"*", "*", "*"}, 0.06);
    rates.marriage = RateTable{"marriage", {"nuts3"}, RateKind::probability};
    rates.marriage.set({"*"}, 0.05);
    rates.separation = RateTable{"separation", {}, RateKind::probability};
    rates.separation.set({}, 0.01);
    rates.returner_rate = RateTable{"returner_rate", {"nuts3"}, RateKind::probability};
    rates.returner_rate.set({"*"}, 0.01);
    rates.dropout.set({"DEG"}, 0.05);
    return rates;
}

std::vector<Individual> mixed_population(int count) {
    std::vector<Individual> out;
    for (int i = 0; i < count; ++i) {
        const int age = i % 90;
        auto p = person(i + 1, age, i % 2 == 0 ? Sex::F : Sex::M, static_cast<AreaIndex>(i % 3));
        if (age >= 4 && age < 20) {
            p.economic_status = EconomicStatus::S;
        }
        if (i % 7 == 0) {
            p.moved_last_year = true;
        }
        out.push_back(p);
    }
    return out;
}

} // namespace

TEST_CASE("a full year balances its population accounts") {
    const auto geo = test_geography();
    const auto rates = busy_rates();
    auto config = test_config();
    config.net_migration_scale = 0.002;
    Simulation sim{config, geo, rates};

    auto state = sim.initialize(mixed_population(3'000));
    const auto accounts = sim.run(state);
    REQUIRE(accounts.size() == 8);
    double population = 3'000;
    for (const auto &a : accounts) {
        CHECK(a.population_start == population);
        CHECK(a.population_end == a.population_start - a.deaths + a.births - a.emigrants + a.immigrants);
        CHECK(a.net_international == config.net_migration(a.year));
        CHECK(a.net_internal_by_county[0] == -5);
        CHECK(a.internal_moves == 35);
        population = a.population_end;
    }
    CHECK(state.year == 2030);
    validate_population(state.people);
    for (const auto &p : state.people) {
        if (p.age < kAdultAge) {
            CHECK((p.economic_status == EconomicStatus::NA || p.economic_status == EconomicStatus::S));
        }
    }
}

TEST_CASE("runs are reproducible and differ between run indices") {
    const auto geo = test_geography();
    const auto rates = busy_rates();
    auto config = test_config();
    config.end_year = 2026;
    config.net_migration_scale = 0.002;

    const auto simulate = [&](int run) {
        Simulation sim{config, geo, rates, run};
        auto state = sim.initialize(mixed_population(2'000));
        sim.run(state);
        return state.people;
    };
    const auto first = simulate(0);
    CHECK(simulate(0) == first);
    CHECK(simulate(1) != first);
}

TEST_CASE("observer sees the start state and every simulated year") {
    const auto geo = test_geography();
    const auto rates = quiet_rates();
    auto config = test_config();
    config.end_year = 2025;
    Simulation sim{config, geo, rates};
    auto state = sim.initialize(adults(20));
    std::vector<int> years;
    sim.run(state, [&](const PopulationState &s) { years.push_back(s.year); });
    CHECK(years == std::vector<int>{2022, 2023, 2024, 2025});
}

TEST_CASE("accounts average across runs and write to CSV") {
    const auto geo = test_geography();
    YearAccount a = blank_account(geo);
    a.year = 2023;
    a.births = 10;
    a.net_internal_by_county = {-2, 2};
    YearAccount b = a;
    b.births = 20;
    b.net_internal_by_county = {-4, 4};
    const auto mean = average_accounts({{a}, {b}});
    REQUIRE(mean.size() == 1);
    CHECK(mean[0].births == 15);
    CHECK(mean[0].net_internal_by_county[1] == 3);

    testing::TempDir dir{"accounts"};
    write_accounts(dir.path() / "accounting.csv", mean, geo);
    const auto csv = read_csv(dir.path() / "accounting.csv");
    REQUIRE(csv.rows.size() == 1);
    CHECK(csv.rows[0][csv.column("births")] == "15");
    CHECK(csv.rows[0][csv.column("net_internal_by_county")] == "A:-3;B:3");
}
