#pragma once

#include "srh/core/rng.hpp"
#include "srh/encoding.hpp"
#include "srh/population.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace srh {

inline constexpr int kThresholdCount = kSrhCategories - 1;

using ThresholdVector = Eigen::Matrix<double, kThresholdCount, 1>;

enum class Link { logit, probit };

std::string_view to_string(Link link) noexcept;
Link parse_link(std::string_view text);

/// Link distribution F, its density f and the derivative of the density.
template <typename Scalar>
Scalar link_cdf(Link link, Scalar z) {
    using std::erfc;
    using std::exp;
    if (link == Link::logit) {
        return z >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-z)) : exp(z) / (Scalar(1) + exp(z));
    }
    return Scalar(0.5) * erfc(-z / Scalar(M_SQRT2));
}

/// Upper tail 1 - F(z), evaluated without cancellation.
template <typename Scalar>
Scalar link_sf(Link link, Scalar z) {
    return link_cdf(link, -z);
}

template <typename Scalar>
Scalar link_pdf(Link link, Scalar z) {
    using std::exp;
    if (link == Link::logit) {
        const Scalar e = exp(-std::abs(z));
        return e / ((Scalar(1) + e) * (Scalar(1) + e));
    }
    return exp(Scalar(-0.5) * z * z) / Scalar(std::sqrt(2.0 * M_PI));
}

template <typename Scalar>
Scalar link_pdf_derivative(Link link, Scalar z) {
    if (link == Link::logit) {
        return link_pdf(link, z) * (Scalar(1) - Scalar(2) * link_cdf(link, z));
    }
    return -z * link_pdf(link, z);
}

double link_quantile(Link link, double p);

/// @brief Cumulative-link model P(Y <= k | x) = F(tau_k + x.beta).
///
/// Category codes run 0 (Very Good) to 4 (Very Bad). Under this form a positive linear
/// predictor raises every cumulative probability, so a positive coefficient moves mass toward
/// the better (lower-coded) categories.
struct OrdinalModel {
    Eigen::VectorXd beta;
    ThresholdVector thresholds{ThresholdVector::Zero()};
    Link link{Link::logit};
    std::string schema_fingerprint;

    /// Throws Error(invalid_input) unless thresholds strictly increase and everything is finite.
    void validate() const;

    nlohmann::json to_json() const;
    static OrdinalModel from_json(const nlohmann::json &doc);
    static OrdinalModel load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;
};

/// F(tau_k + x.beta) for k in 1..4.
double cumulative_prob(const OrdinalModel &model, const FeatureVector &x, int k);

/// Category probabilities given the linear predictor x.beta.
SrhDistribution predict_proba_eta(const OrdinalModel &model, double eta);
SrhDistribution predict_proba(const OrdinalModel &model, const FeatureVector &x);

/// Inverse-CDF draw from predict_proba using one uniform variate.
SrhCategory sample_category(const OrdinalModel &model, const FeatureVector &x, RngEngine &rng);
SrhCategory sample_from(const SrhDistribution &distribution, RngEngine &rng);

/// Weighted rows of (features, observed category). Rows are stored densely.
class TrainingSet {
  public:
    TrainingSet() = default;
    explicit TrainingSet(std::size_t features) : features_(features) {}

    void add(const FeatureVector &x, SrhCategory y, double weight = 1.0);
    void reserve(std::size_t rows);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t feature_count() const noexcept { return features_; }
    bool empty() const noexcept { return labels_.empty(); }

    /// Row-major n x p view of the features.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    features() const;
    const std::vector<SrhCategory> &labels() const noexcept { return labels_; }
    const std::vector<double> &weights() const noexcept { return weights_; }

    /// Throws Error(invalid_input) for negative or non-finite weights or when the lowest or
    /// highest category is never observed.
    void validate() const;

  private:
    std::size_t features_{0};
    std::vector<double> values_;
    std::vector<SrhCategory> labels_;
    std::vector<double> weights_;
};

/// Unconstrained parameter vector: beta, tau_1, then log threshold gaps s_1..s_3.
Eigen::VectorXd pack_parameters(const OrdinalModel &model);
OrdinalModel unpack_parameters(const Eigen::VectorXd &theta, Link link,
                               std::string schema_fingerprint = {});

/// Weighted sum of log p_y(x). Probabilities are clamped at 1e-300 (with a warning); a
/// non-finite result throws Error(non_finite_likelihood).
double log_likelihood(const OrdinalModel &model, const TrainingSet &data);

/// Gradient of log_likelihood with respect to the unconstrained parameters.
Eigen::VectorXd gradient(const OrdinalModel &model, const TrainingSet &data);

struct FitOptions {
    int max_iterations{500};
    double gradient_tolerance{1e-8};
    /// Penalty lambda/2 * |beta|^2 subtracted from the log-likelihood.
    double ridge{0.0};
    unsigned workers{1};
    std::string schema_fingerprint;
};

struct FitResult {
    OrdinalModel model;
    int iterations{0};
    double gradient_norm{0.0};
    double log_likelihood{0.0};
};

inline constexpr double kSeparationThreshold = 30.0;

/// Newton ascent with backtracking line search and a gradient-step fallback. Rows are put in a
/// canonical order first, so permuting the input yields the same model bit for bit.
/// Throws Error(nonconvergence) after max_iterations; warns when any |beta| exceeds 30.
FitResult fit(const TrainingSet &data, Link link = Link::logit, const FitOptions &options = {});

struct CoefficientEffect {
    std::string feature;
    double coefficient{0.0};
    /// "better", "worse" or "none" for the direction the characteristic moves SRH.
    std::string direction;
};

/// Coefficients sorted by decreasing magnitude (ties keep feature order).
std::vector<CoefficientEffect> summarize(const OrdinalModel &model,
                                         const std::vector<std::string> &feature_names);

void write_summary(const std::filesystem::path &path, const std::vector<CoefficientEffect> &effects);

} // namespace srh
