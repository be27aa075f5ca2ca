#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace srh {

enum class RateKind { probability, count, weight };

std::string_view to_string(RateKind kind) noexcept;

/// @brief Keyed lookup from characteristic tuples to a probability, count or weight.
///
/// Keys are text codes, one per dimension. A "*" component matches any value; lookups try the
/// exact key first and then keys with progressively more wildcards (fewest first, earlier
/// dimensions first among equals).
class RateTable {
  public:
    static constexpr std::string_view kWildcard = "*";

    RateTable() = default;
    RateTable(std::string name, std::vector<std::string> dimensions, RateKind kind);

    const std::string &name() const noexcept { return name_; }
    const std::vector<std::string> &dimensions() const noexcept { return dimensions_; }
    RateKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    /// Throws Error(duplicate_key) or Error(invalid_rate).
    void set(std::vector<std::string> key, double value);

    std::optional<double> find(std::span<const std::string> key) const;
    /// Throws Error(missing_rate) when no exact or wildcard entry matches.
    double lookup(std::span<const std::string> key) const;
    double lookup(std::initializer_list<std::string> key) const;

    /// Entries sharing all but the last key component, as (last component, value) pairs in file
    /// order. Wildcard fallback applies to the prefix. Empty when nothing matches.
    std::vector<std::pair<std::string, double>> row(std::span<const std::string> prefix) const;

    /// Entries in insertion order.
    const std::vector<std::pair<std::vector<std::string>, double>> &entries() const noexcept {
        return entries_;
    }

    /// Header: the dimension names followed by "value".
    static RateTable read_csv(const std::filesystem::path &path, std::string name, RateKind kind);
    void write_csv(const std::filesystem::path &path) const;

  private:
    std::optional<std::size_t> find_index(std::span<const std::string> key) const;
    const std::vector<std::size_t> *find_row(std::span<const std::string> prefix) const;

    std::string name_;
    std::vector<std::string> dimensions_;
    RateKind kind_{RateKind::probability};
    std::vector<std::pair<std::vector<std::string>, double>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::vector<std::size_t>> rows_;
};

} // namespace srh
