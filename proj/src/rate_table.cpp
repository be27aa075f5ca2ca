#include "srh/rate_table.hpp"

#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <bit>
#include <cmath>

namespace srh {

namespace {

constexpr char kSeparator = '\x1f';

std::string join(std::span<const std::string> parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out.push_back(kSeparator);
        }
        out += parts[i];
    }
    return out;
}

/// Wildcard masks over `dims` dimensions: fewest wildcards first, then by mask value.
const std::vector<unsigned> &masks_for(std::size_t dims) {
    static const auto table = [] {
        std::vector<std::vector<unsigned>> all(17);
        for (std::size_t d = 0; d < all.size(); ++d) {
            auto &masks = all[d];
            for (unsigned m = 0; m < (1u << d); ++m) {
                masks.push_back(m);
            }
            std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
                return std::popcount(a) < std::popcount(b);
            });
        }
        return all;
    }();
    if (dims >= table.size()) {
        throw Error{ErrorCode::invalid_input, "rate tables support at most 16 dimensions"};
    }
    return table[dims];
}

template <typename Probe>
auto with_wildcards(std::span<const std::string> key, Probe &&probe)
    -> decltype(probe(std::string{})) {
    std::vector<std::string> candidate(key.begin(), key.end());
    for (unsigned mask : masks_for(key.size())) {
        for (std::size_t i = 0; i < key.size(); ++i) {
            candidate[i] = (mask >> i) & 1u ? std::string{RateTable::kWildcard} : key[i];
        }
        if (auto hit = probe(join(candidate))) {
            return hit;
        }
    }
    return {};
}

} // namespace

std::string_view to_string(RateKind kind) noexcept {
    switch (kind) {
    case RateKind::probability:
        return "probability";
    case RateKind::count:
        return "count";
    case RateKind::weight:
        return "weight";
    }
    return "?";
}

RateTable::RateTable(std::string name, std::vector<std::string> dimensions, RateKind kind)
    : name_(std::move(name)), dimensions_(std::move(dimensions)), kind_(kind) {}

void RateTable::set(std::vector<std::string> key, double value) {
    if (key.size() != dimensions_.size()) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("{}: key has {} components, table has {} dimensions", name_,
                                key.size(), dimensions_.size())};
    }
    const bool valid = std::isfinite(value) && value >= 0.0 &&
                       (kind_ != RateKind::probability || value <= 1.0);
    if (!valid) {
        throw Error{ErrorCode::invalid_rate,
                    fmt::format("{}: {} value {} for ({}) is out of range", name_, to_string(kind_),
                                value, fmt::join(key, ", "))};
    }
    auto joined = join(key);
    if (index_.contains(joined)) {
        throw Error{ErrorCode::duplicate_key,
                    fmt::format("{}: duplicate key ({})", name_, fmt::join(key, ", "))};
    }
    index_.emplace(std::move(joined), entries_.size());
    if (!key.empty()) {
        rows_[join(std::span<const std::string>{key}.first(key.size() - 1))].push_back(entries_.size());
    }
    entries_.emplace_back(std::move(key), value);
}

std::optional<std::size_t> RateTable::find_index(std::span<const std::string> key) const {
    if (key.size() != dimensions_.size()) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("{}: lookup key has {} components, table has {} dimensions", name_,
                                key.size(), dimensions_.size())};
    }
    return with_wildcards(key, [&](const std::string &joined) -> std::optional<std::size_t> {
        if (auto it = index_.find(joined); it != index_.end()) {
            return it->second;
        }
        return std::nullopt;
    });
}

std::optional<double> RateTable::find(std::span<const std::string> key) const {
    if (auto i = find_index(key)) {
        return entries_[*i].second;
    }
    return std::nullopt;
}

double RateTable::lookup(std::span<const std::string> key) const {
    if (auto value = find(key)) {
        return *value;
    }
    throw Error{ErrorCode::missing_rate,
                fmt::format("{}: no rate for ({})", name_, fmt::join(key, ", "))};
}

double RateTable::lookup(std::initializer_list<std::string> key) const {
    return lookup(std::span<const std::string>{key.begin(), key.size()});
}

const std::vector<std::size_t> *RateTable::find_row(std::span<const std::string> prefix) const {
    if (prefix.size() + 1 != dimensions_.size()) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("{}: row prefix has {} components, expected {}", name_,
                                prefix.size(), dimensions_.size() - 1)};
    }
    return with_wildcards(prefix, [&](const std::string &joined) -> const std::vector<std::size_t> * {
        if (auto it = rows_.find(joined); it != rows_.end()) {
            return &it->second;
        }
        return nullptr;
    });
}

std::vector<std::pair<std::string, double>> RateTable::row(std::span<const std::string> prefix) const {
    std::vector<std::pair<std::string, double>> out;
    if (const auto *indices = find_row(prefix)) {
        for (auto i : *indices) {
            out.emplace_back(entries_[i].first.back(), entries_[i].second);
        }
    }
    return out;
}

RateTable RateTable::read_csv(const std::filesystem::path &path, std::string name, RateKind kind) {
    const auto csv = srh::read_csv(path);
    if (csv.header.empty() || csv.header.back() != "value") {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("{}: the last column of a rate table must be 'value'", path.string())};
    }
    std::vector<std::string> dims(csv.header.begin(), csv.header.end() - 1);
    RateTable table{std::move(name), std::move(dims), kind};
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto &row = csv.rows[i];
        std::vector<std::string> key(row.begin(), row.end() - 1);
        table.set(std::move(key), parse_real(row.back(), fmt::format("{} row {}", path.string(), i + 1)));
    }
    return table;
}

void RateTable::write_csv(const std::filesystem::path &path) const {
    auto header = dimensions_;
    header.emplace_back("value");
    CsvWriter out{path, header};
    for (const auto &[key, value] : entries_) {
        auto row = key;
        row.push_back(format_real(value));
        out.write_row(row);
    }
    out.close();
}

} // namespace srh
