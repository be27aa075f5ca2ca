#include "srh/compositional.hpp"
#include "srh/gp.hpp"

#include <spdlog/spdlog.h>

namespace srh {

namespace detail {

void warn_floored_composition(int zero_parts) {
    spdlog::warn("composition has {} zero part(s); floored at {} and re-closed", zero_parts,
                 kCompositionFloor);
}

} // namespace detail

GpModel<double> fit_gp(std::span<const int> years, std::span<const double> values,
                       const GpFitOptions &options) {
    if (years.size() < 2 || years.size() != values.size()) {
        throw Error{ErrorCode::invalid_input, "GP fit needs at least two (year, value) points"};
    }
    for (std::size_t i = 1; i < years.size(); ++i) {
        if (years[i] <= years[i - 1]) {
            throw Error{ErrorCode::invalid_input, "GP training years must be strictly increasing"};
        }
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(years.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < years.size(); ++i) {
        x(static_cast<Eigen::Index>(i)) = years[i];
        y(static_cast<Eigen::Index>(i)) = values[i];
    }
    if (!y.allFinite()) {
        throw Error{ErrorCode::invalid_input, "GP targets must be finite"};
    }
    if (options.fixed) {
        return GpModel<double>{x, y, *options.fixed};
    }
    const auto base = default_hyperparameters(y);
    if (!options.grid_search) {
        return GpModel<double>{x, y, base};
    }

    constexpr std::array<double, 5> multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
    std::optional<GpModel<double>> best;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double ml : multipliers) {
        for (double ms : multipliers) {
            GpHyperparameters<double> hyper{base.lengthscale * ml, base.signal_sd * ms,
                                            base.noise_sd * ms};
            GpModel<double> candidate{x, y, hyper};
            const double lml = candidate.log_marginal_likelihood();
            if (lml > best_lml) {
                best_lml = lml;
                best.emplace(std::move(candidate));
            }
        }
    }
    return *best;
}

} // namespace srh
