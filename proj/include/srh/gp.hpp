#pragma once

#include "srh/core/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>

namespace srh {

/// Squared-exponential kernel hyperparameters with Gaussian observation noise.
template <typename Scalar>
struct GpHyperparameters {
    Scalar lengthscale{10};
    Scalar signal_sd{1};
    Scalar noise_sd{Scalar(0.05)};
};

template <typename Scalar>
struct GpPrediction {
    Scalar mean;
    /// Predictive variance of a new observation (latent variance plus noise).
    Scalar variance;
};

template <typename Scalar>
Scalar squared_exponential(Scalar a, Scalar b, const GpHyperparameters<Scalar> &hyper) {
    const Scalar d = (a - b) / hyper.lengthscale;
    return hyper.signal_sd * hyper.signal_sd * std::exp(Scalar(-0.5) * d * d);
}

/// Exact GP regression on a scalar input with a constant prior mean equal to the training mean.
template <typename Scalar>
class GpModel {
  public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    GpModel(Vector inputs, Vector targets, GpHyperparameters<Scalar> hyper)
        : inputs_{std::move(inputs)}, targets_{std::move(targets)}, hyper_{hyper} {
        const auto n = inputs_.size();
        if (n < 1 || targets_.size() != n) {
            throw Error{ErrorCode::invalid_input, "GP needs matching, non-empty inputs and targets"};
        }
        if (!(hyper_.lengthscale > 0) || !(hyper_.signal_sd > 0) ||
            hyper_.noise_sd * hyper_.noise_sd < Scalar(1e-8)) {
            throw Error{ErrorCode::invalid_input, "GP hyperparameters out of range"};
        }
        prior_mean_ = targets_.mean();

        Matrix kernel(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                kernel(i, j) = squared_exponential(inputs_(i), inputs_(j), hyper_);
            }
        }
        kernel.diagonal().array() += hyper_.noise_sd * hyper_.noise_sd;

        const Scalar scale = hyper_.signal_sd * hyper_.signal_sd;
        for (int attempt = 0; attempt <= 7; ++attempt) {
            jitter_ = attempt == 0 ? Scalar(0) : Scalar(1e-10) * scale * std::pow(Scalar(10), attempt - 1);
            Matrix jittered = kernel;
            jittered.diagonal().array() += jitter_;
            llt_.compute(jittered);
            if (llt_.info() == Eigen::Success && (llt_.matrixLLT().diagonal().array() > 0).all()) {
                alpha_ = llt_.solve((targets_.array() - prior_mean_).matrix());
                return;
            }
        }
        throw Error{ErrorCode::degenerate_kernel, "kernel matrix is not positive definite"};
    }

    GpPrediction<Scalar> predict(Scalar input) const {
        Vector k(inputs_.size());
        for (Eigen::Index i = 0; i < inputs_.size(); ++i) {
            k(i) = squared_exponential(input, inputs_(i), hyper_);
        }
        const Vector v = llt_.matrixL().solve(k);
        const Scalar prior_var = hyper_.signal_sd * hyper_.signal_sd + hyper_.noise_sd * hyper_.noise_sd;
        return {prior_mean_ + k.dot(alpha_), std::max(Scalar(0), prior_var - v.squaredNorm())};
    }

    Scalar log_marginal_likelihood() const {
        const Vector centred = (targets_.array() - prior_mean_).matrix();
        const auto n = static_cast<Scalar>(targets_.size());
        return Scalar(-0.5) * centred.dot(alpha_) -
               llt_.matrixLLT().diagonal().array().log().sum() -
               Scalar(0.5) * n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
    }

    Scalar prior_mean() const noexcept { return prior_mean_; }
    Scalar jitter() const noexcept { return jitter_; }
    const GpHyperparameters<Scalar> &hyperparameters() const noexcept { return hyper_; }
    const Vector &inputs() const noexcept { return inputs_; }
    const Vector &targets() const noexcept { return targets_; }

  private:
    Vector inputs_;
    Vector targets_;
    GpHyperparameters<Scalar> hyper_;
    Scalar prior_mean_{};
    Scalar jitter_{};
    Eigen::LLT<Matrix> llt_;
    Vector alpha_;
};

/// Defaults for three-point series: lengthscale 10 years, signal sd = sample sd floored at 0.05,
/// noise sd = 5% of the signal sd.
template <typename Derived>
GpHyperparameters<typename Derived::Scalar>
default_hyperparameters(const Eigen::MatrixBase<Derived> &targets) {
    using Scalar = typename Derived::Scalar;
    Scalar sd{0};
    if (targets.size() > 1) {
        const Scalar mean = targets.mean();
        sd = std::sqrt((targets.array() - mean).square().sum() / Scalar(targets.size() - 1));
    }
    const Scalar signal = std::max(sd, Scalar(0.05));
    return {Scalar(10), signal, Scalar(0.05) * signal};
}

struct GpFitOptions {
    /// Coarse 5x5 search over (lengthscale, signal sd) multipliers by marginal likelihood.
    bool grid_search{false};
    std::optional<GpHyperparameters<double>> fixed;
};

/// Throws Error(invalid_input) for fewer than two points or non-increasing years.
GpModel<double> fit_gp(std::span<const int> years, std::span<const double> values,
                       const GpFitOptions &options = {});

} // namespace srh
