#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srh {

/// @brief Failure categories surfaced by the toolkit.
enum class ErrorCode {
    invalid_input,
    invalid_config,
    io,
    unknown_category,
    underage_individual,
    unmapped_area,
    invalid_distribution,
    unknown_status_label,
    unknown_scenario,
    missing_rate,
    duplicate_key,
    invalid_rate,
    missing_flow,
    missing_profile_cell,
    missing_table,
    row_not_stochastic,
    odd_married_count,
    non_finite_likelihood,
    nonconvergence,
    degenerate_kernel,
    too_few_samples,
    no_fallback,
    empty_area,
    no_facilities,
    infeasible_spec,
    missing_outputs,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message);

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix that what() carries.
    const std::string &message() const noexcept { return message_; }

  private:
    ErrorCode code_;
    std::string message_;
};

} // namespace srh
