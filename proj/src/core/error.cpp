#include "srh/core/error.hpp"

#include <fmt/format.h>

namespace srh {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_input: return "InvalidInput";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::io: return "Io";
    case ErrorCode::unknown_category: return "UnknownCategory";
    case ErrorCode::underage_individual: return "UnderageIndividual";
    case ErrorCode::unmapped_area: return "UnmappedArea";
    case ErrorCode::invalid_distribution: return "InvalidDistribution";
    case ErrorCode::unknown_status_label: return "UnknownStatusLabel";
    case ErrorCode::unknown_scenario: return "UnknownScenario";
    case ErrorCode::missing_rate: return "MissingRate";
    case ErrorCode::duplicate_key: return "DuplicateKey";
    case ErrorCode::invalid_rate: return "InvalidRate";
    case ErrorCode::missing_flow: return "MissingFlow";
    case ErrorCode::missing_profile_cell: return "MissingProfileCell";
    case ErrorCode::missing_table: return "MissingTable";
    case ErrorCode::row_not_stochastic: return "RowNotStochastic";
    case ErrorCode::odd_married_count: return "OddMarriedCount";
    case ErrorCode::non_finite_likelihood: return "NonFiniteLikelihood";
    case ErrorCode::nonconvergence: return "Nonconvergence";
    case ErrorCode::degenerate_kernel: return "DegenerateKernel";
    case ErrorCode::too_few_samples: return "TooFewSamples";
    case ErrorCode::no_fallback: return "NoFallback";
    case ErrorCode::empty_area: return "EmptyArea";
    case ErrorCode::no_facilities: return "NoFacilities";
    case ErrorCode::infeasible_spec: return "InfeasibleSpec";
    case ErrorCode::missing_outputs: return "MissingOutputs";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error{fmt::format("{}: {}", to_string(code), message)}, code_{code}, message_{message} {}

} // namespace srh
