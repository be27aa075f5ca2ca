#include "srh/population_io.hpp"

#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <unordered_map>

namespace srh {

namespace {

bool parse_bool(std::string_view text, std::string_view where) {
    if (text == "true" || text == "1" || text == "TRUE" || text == "True") {
        return true;
    }
    if (text == "false" || text == "0" || text == "FALSE" || text == "False") {
        return false;
    }
    throw Error{ErrorCode::invalid_input, fmt::format("{}: '{}' is not a boolean", where, text)};
}

} // namespace

std::vector<Individual> read_population(const std::filesystem::path &path, const Geography &geography) {
    const auto table = read_csv(path);
    std::array<std::size_t, kPopulationColumns.size()> c{};
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = table.column(kPopulationColumns[i]);
    }
    std::vector<Individual> people;
    people.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        const auto where = fmt::format("{} row {}", path.string(), r + 1);
        Individual p;
        p.id = parse_int(row[c[0]], where);
        p.age = parse_int(row[c[1]], where);
        p.sex = parse_category<Sex>(row[c[2]]);
        p.marital_status = parse_category<MaritalStatus>(row[c[3]]);
        p.citizenship = parse_category<Citizenship>(row[c[4]]);
        p.moved_last_year = parse_bool(row[c[5]], where);
        p.education = parse_category<Education>(row[c[6]]);
        p.economic_status = parse_category<EconomicStatus>(row[c[7]]);
        p.area = geography.index_of(row[c[8]]);
        if (!row[c[9]].empty()) {
            p.spouse_id = parse_int(row[c[9]], where);
        }
        if (!row[c[10]].empty()) {
            p.graduation_year = parse_int(row[c[10]], where);
        }
        people.push_back(p);
    }
    return people;
}

void write_population(const std::filesystem::path &path, const std::vector<Individual> &people,
                      const Geography &geography) {
    CsvWriter out{path, std::vector<std::string>(kPopulationColumns.begin(), kPopulationColumns.end())};
    for (const auto &p : people) {
        out.write_row({std::to_string(p.id), std::to_string(p.age), std::string{code(p.sex)},
                       std::string{code(p.marital_status)}, std::string{code(p.citizenship)},
                       p.moved_last_year ? "true" : "false", std::string{code(p.education)},
                       std::string{code(p.economic_status)}, geography.area(p.area).id,
                       p.spouse_id ? std::to_string(*p.spouse_id) : std::string{},
                       p.graduation_year ? std::to_string(*p.graduation_year) : std::string{}});
    }
    out.close();
}

void validate_population(const std::vector<Individual> &people, int adult_age) {
    auto fail = [](const std::string &message) { throw Error{ErrorCode::invalid_input, message}; };
    std::unordered_map<PersonId, const Individual *> by_id;
    by_id.reserve(people.size());
    for (const auto &p : people) {
        if (!by_id.emplace(p.id, &p).second) {
            fail(fmt::format("duplicate individual id {}", p.id));
        }
        if (p.age < 0 || p.age > kMaxAge) {
            fail(fmt::format("individual {} has age {} outside [0, {}]", p.id, p.age, kMaxAge));
        }
        if (p.age < adult_age && p.economic_status != EconomicStatus::NA &&
            p.economic_status != EconomicStatus::S) {
            fail(fmt::format("child {} has economic status {}", p.id, code(p.economic_status)));
        }
        if (p.graduation_year && p.economic_status != EconomicStatus::S) {
            fail(fmt::format("individual {} has a graduation year but is not a student", p.id));
        }
    }
    for (const auto &p : people) {
        if (!p.spouse_id) {
            continue;
        }
        const auto it = by_id.find(*p.spouse_id);
        if (it == by_id.end()) {
            fail(fmt::format("individual {} links to missing spouse {}", p.id, *p.spouse_id));
        }
        const auto &spouse = *it->second;
        if (spouse.spouse_id != p.id) {
            fail(fmt::format("spouse link {} -> {} is not symmetric", p.id, spouse.id));
        }
        if (p.marital_status != MaritalStatus::MAR || spouse.marital_status != MaritalStatus::MAR) {
            fail(fmt::format("linked spouses {} and {} must both be married", p.id, spouse.id));
        }
    }
}

} // namespace srh
