#include "srh/ordinal.hpp"

#include "srh/core/csv.hpp"
#include "srh/core/error.hpp"
#include "srh/core/parallel.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>

namespace srh {

namespace {

constexpr double kProbabilityFloor = 1e-300;
constexpr std::size_t kBlockRows = 512;
constexpr double kMinimumGap = 1e-3;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ThresholdMatrix = Eigen::Matrix<double, kThresholdCount, kThresholdCount>;

ThresholdVector thresholds_from(const Eigen::VectorXd &theta, Eigen::Index p) {
    ThresholdVector tau;
    tau(0) = theta(p);
    for (int k = 1; k < kThresholdCount; ++k) {
        tau(k) = tau(k - 1) + std::exp(theta(p + k));
    }
    return tau;
}

/// Probability of category c given its bracketing latent values.
double category_probability(Link link, int c, double a, double b) {
    if (c == 0) {
        return link_cdf(link, a);
    }
    if (c == kSrhCategories - 1) {
        return link_sf(link, b);
    }
    if (b > 0.0) {
        return link_sf(link, b) - link_sf(link, a);
    }
    return link_cdf(link, a) - link_cdf(link, b);
}

/// Partial sums for one block of rows, in threshold (tau) coordinates.
struct Accumulator {
    double ll{0.0};
    std::size_t clamped{0};
    Eigen::VectorXd g_beta;
    ThresholdVector g_tau{ThresholdVector::Zero()};
    Eigen::MatrixXd h_beta;
    Eigen::MatrixXd h_cross;
    ThresholdMatrix h_tau{ThresholdMatrix::Zero()};

    void merge(const Accumulator &other, int order) {
        ll += other.ll;
        clamped += other.clamped;
        if (order >= 1) {
            g_beta += other.g_beta;
            g_tau += other.g_tau;
        }
        if (order >= 2) {
            h_beta += other.h_beta;
            h_cross += other.h_cross;
            h_tau += other.h_tau;
        }
    }
};

struct Evaluation {
    double ll{0.0};
    std::size_t clamped{0};
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
};

class Objective {
  public:
    Objective(const TrainingSet &data, Link link, Eigen::VectorXd ridge, unsigned workers)
        : x_(data.features()), labels_(data.labels()), weights_(data.weights()), link_(link),
          ridge_(std::move(ridge)), workers_(workers) {}

    Eigen::Index feature_count() const { return x_.cols(); }

    Evaluation evaluate(const Eigen::VectorXd &theta, int order) const {
        const auto p = x_.cols();
        const Eigen::VectorXd beta = theta.head(p);
        const ThresholdVector tau = thresholds_from(theta, p);

        const auto n = static_cast<std::size_t>(x_.rows());
        const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
        std::vector<Accumulator> parts(std::max<std::size_t>(blocks, 1));
        for (auto &part : parts) {
            init(part, p, order);
        }
        parallel_for(blocks, workers_, [&](std::size_t b) {
            const auto begin = b * kBlockRows;
            const auto end = std::min(n, begin + kBlockRows);
            accumulate_block(parts[b], beta, tau, begin, end, order);
        });

        // Pairwise tree reduction in a fixed shape keeps sums worker-count independent.
        for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
            for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
                parts[i].merge(parts[i + stride], order);
            }
        }
        return to_parameters(parts.front(), theta, order);
    }

  private:
    void init(Accumulator &acc, Eigen::Index p, int order) const {
        if (order >= 1) {
            acc.g_beta = Eigen::VectorXd::Zero(p);
        }
        if (order >= 2) {
            acc.h_beta = Eigen::MatrixXd::Zero(p, p);
            acc.h_cross = Eigen::MatrixXd::Zero(p, kThresholdCount);
        }
    }

    void accumulate_block(Accumulator &acc, const Eigen::VectorXd &beta, const ThresholdVector &tau,
                          std::size_t begin, std::size_t end, int order) const {
        const auto rows = static_cast<Eigen::Index>(end - begin);
        const auto block = x_.middleRows(static_cast<Eigen::Index>(begin), rows);
        const Eigen::VectorXd eta = block * beta;
        Eigen::VectorXd g_eta(rows);
        Eigen::VectorXd h_eta(rows);
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(order >= 2 ? rows : 0, kThresholdCount);

        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto i = begin + static_cast<std::size_t>(r);
            const int c = static_cast<int>(labels_[i]);
            const double w = weights_[i];
            const bool has_upper = c < kThresholdCount;
            const bool has_lower = c > 0;
            const double a = has_upper ? tau(c) + eta(r) : 0.0;
            const double b = has_lower ? tau(c - 1) + eta(r) : 0.0;
            double prob = category_probability(link_, c, a, b);
            if (!(prob >= kProbabilityFloor)) {
                if (std::isnan(prob)) {
                    acc.ll = std::numeric_limits<double>::quiet_NaN();
                }
                prob = kProbabilityFloor;
                ++acc.clamped;
            }
            acc.ll += w * std::log(prob);
            if (order < 1) {
                continue;
            }
            const double ua = has_upper ? link_pdf(link_, a) / prob : 0.0;
            const double ub = has_lower ? -link_pdf(link_, b) / prob : 0.0;
            g_eta(r) = w * (ua + ub);
            if (has_upper) {
                acc.g_tau(c) += w * ua;
            }
            if (has_lower) {
                acc.g_tau(c - 1) += w * ub;
            }
            if (order < 2) {
                continue;
            }
            const double haa = has_upper ? link_pdf_derivative(link_, a) / prob - ua * ua : 0.0;
            const double hbb = has_lower ? -link_pdf_derivative(link_, b) / prob - ub * ub : 0.0;
            const double hab = (has_upper && has_lower) ? -ua * ub : 0.0;
            h_eta(r) = w * (haa + hbb + 2.0 * hab);
            if (has_upper) {
                cross(r, c) += w * (haa + hab);
                acc.h_tau(c, c) += w * haa;
            }
            if (has_lower) {
                cross(r, c - 1) += w * (hbb + hab);
                acc.h_tau(c - 1, c - 1) += w * hbb;
            }
            if (has_upper && has_lower) {
                acc.h_tau(c, c - 1) += w * hab;
                acc.h_tau(c - 1, c) += w * hab;
            }
        }
        if (order >= 1) {
            acc.g_beta.noalias() += block.transpose() * g_eta;
        }
        if (order >= 2) {
            acc.h_beta.noalias() += block.transpose() * h_eta.asDiagonal() * block;
            acc.h_cross.noalias() += block.transpose() * cross;
        }
    }

    Evaluation to_parameters(const Accumulator &acc, const Eigen::VectorXd &theta,
                             int order) const {
        const auto p = x_.cols();
        Evaluation out;
        out.clamped = acc.clamped;
        const Eigen::VectorXd beta = theta.head(p);
        out.ll = acc.ll - 0.5 * ridge_.dot(beta.cwiseAbs2());
        if (order < 1) {
            return out;
        }

        // Jacobian of tau with respect to (tau_1, s_1, s_2, s_3).
        ThresholdMatrix jac = ThresholdMatrix::Zero();
        ThresholdVector gaps;
        gaps(0) = 0.0;
        for (int j = 1; j < kThresholdCount; ++j) {
            gaps(j) = std::exp(theta(p + j));
        }
        for (int k = 0; k < kThresholdCount; ++k) {
            jac(k, 0) = 1.0;
            for (int j = 1; j <= k; ++j) {
                jac(k, j) = gaps(j);
            }
        }

        const auto dim = p + kThresholdCount;
        out.g.resize(dim);
        out.g.head(p) = acc.g_beta - ridge_.cwiseProduct(beta);
        out.g.tail(kThresholdCount) = jac.transpose() * acc.g_tau;
        if (order < 2) {
            return out;
        }

        out.h.resize(dim, dim);
        out.h.topLeftCorner(p, p) = acc.h_beta;
        out.h.topLeftCorner(p, p).diagonal() -= ridge_;
        out.h.topRightCorner(p, kThresholdCount) = acc.h_cross * jac;
        out.h.bottomLeftCorner(kThresholdCount, p) = out.h.topRightCorner(p, kThresholdCount).transpose();
        ThresholdMatrix h_theta = jac.transpose() * acc.h_tau * jac;
        for (int j = 1; j < kThresholdCount; ++j) {
            h_theta(j, j) += gaps(j) * acc.g_tau.tail(kThresholdCount - j).sum();
        }
        out.h.bottomRightCorner(kThresholdCount, kThresholdCount) = h_theta;
        return out;
    }

    Eigen::Map<const RowMatrix> x_;
    const std::vector<SrhCategory> &labels_;
    const std::vector<double> &weights_;
    Link link_;
    Eigen::VectorXd ridge_;
    unsigned workers_;
};

void warn_clamped(std::size_t clamped) {
    if (clamped > 0) {
        spdlog::warn("{} category probabilities underflowed and were clamped at 1e-300", clamped);
    }
}

double checked(double ll) {
    if (!std::isfinite(ll)) {
        throw Error{ErrorCode::non_finite_likelihood, "log-likelihood is not finite"};
    }
    return ll;
}

/// Copy of the data with rows sorted by (label, weight, features).
TrainingSet canonical_order(const TrainingSet &data) {
    const auto x = data.features();
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (data.labels()[i] != data.labels()[j]) {
            return data.labels()[i] < data.labels()[j];
        }
        if (data.weights()[i] != data.weights()[j]) {
            return data.weights()[i] < data.weights()[j];
        }
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const auto lhs = x(static_cast<Eigen::Index>(i), c);
            const auto rhs = x(static_cast<Eigen::Index>(j), c);
            if (lhs != rhs) {
                return lhs < rhs;
            }
        }
        return false;
    });
    TrainingSet sorted{data.feature_count()};
    sorted.reserve(data.size());
    for (auto i : order) {
        sorted.add(x.row(static_cast<Eigen::Index>(i)).transpose(), data.labels()[i], data.weights()[i]);
    }
    return sorted;
}

Eigen::VectorXd initial_parameters(const TrainingSet &data, Link link) {
    const auto p = static_cast<Eigen::Index>(data.feature_count());
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + kThresholdCount);
    std::array<double, kSrhCategories> mass{};
    for (std::size_t i = 0; i < data.size(); ++i) {
        mass[static_cast<std::size_t>(data.labels()[i])] += data.weights()[i];
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    ThresholdVector tau;
    double cumulative = 0.0;
    for (int k = 0; k < kThresholdCount; ++k) {
        cumulative += mass[static_cast<std::size_t>(k)];
        tau(k) = link_quantile(link, std::clamp(cumulative / total, 1e-6, 1.0 - 1e-6));
        if (k > 0) {
            tau(k) = std::max(tau(k), tau(k - 1) + kMinimumGap);
        }
    }
    theta(p) = tau(0);
    for (int k = 1; k < kThresholdCount; ++k) {
        theta(p + k) = std::log(tau(k) - tau(k - 1));
    }
    return theta;
}

void warn_separation(const Eigen::VectorXd &beta) {
    if (beta.size() > 0 && beta.cwiseAbs().maxCoeff() > kSeparationThreshold) {
        Eigen::Index at = 0;
        beta.cwiseAbs().maxCoeff(&at);
        spdlog::warn("SeparationWarning: coefficient {} reached {:.4g}; the data may be separable",
                     at, beta(at));
    }
}

} // namespace

std::string_view to_string(Link link) noexcept {
    return link == Link::logit ? "logit" : "probit";
}

Link parse_link(std::string_view text) {
    if (text == "logit") {
        return Link::logit;
    }
    if (text == "probit") {
        return Link::probit;
    }
    throw Error{ErrorCode::invalid_input, fmt::format("unknown link '{}'", text)};
}

double link_quantile(Link link, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error{ErrorCode::invalid_input, fmt::format("quantile level {} outside (0, 1)", p)};
    }
    if (link == Link::logit) {
        return std::log(p / (1.0 - p));
    }
    return -M_SQRT2 * boost::math::erfc_inv(2.0 * p);
}

void OrdinalModel::validate() const {
    if (!beta.allFinite() || !thresholds.allFinite()) {
        throw Error{ErrorCode::invalid_input, "model parameters must be finite"};
    }
    for (int k = 1; k < kThresholdCount; ++k) {
        if (!(thresholds(k) > thresholds(k - 1))) {
            throw Error{ErrorCode::invalid_input, "thresholds must be strictly increasing"};
        }
    }
}

nlohmann::json OrdinalModel::to_json() const {
    nlohmann::json doc;
    doc["link"] = std::string{to_string(link)};
    doc["schema_fingerprint"] = schema_fingerprint;
    doc["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
    doc["thresholds"] = std::vector<double>(thresholds.data(), thresholds.data() + thresholds.size());
    return doc;
}

OrdinalModel OrdinalModel::from_json(const nlohmann::json &doc) {
    try {
        OrdinalModel model;
        model.link = parse_link(doc.at("link").get<std::string>());
        model.schema_fingerprint = doc.value("schema_fingerprint", std::string{});
        const auto beta = doc.at("beta").get<std::vector<double>>();
        model.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
        const auto tau = doc.at("thresholds").get<std::vector<double>>();
        if (tau.size() != static_cast<std::size_t>(kThresholdCount)) {
            throw Error{ErrorCode::invalid_input, "a model needs exactly 4 thresholds"};
        }
        model.thresholds = Eigen::Map<const ThresholdVector>(tau.data());
        model.validate();
        return model;
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_input, fmt::format("malformed model document: {}", e.what())};
    }
}

OrdinalModel OrdinalModel::load(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw Error{ErrorCode::io, fmt::format("cannot open model file {}", path.string())};
    }
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception &e) {
        throw Error{ErrorCode::invalid_input, fmt::format("{}: {}", path.string(), e.what())};
    }
}

void OrdinalModel::save(const std::filesystem::path &path) const {
    std::ofstream out{path};
    if (!out) {
        throw Error{ErrorCode::io, fmt::format("cannot write model file {}", path.string())};
    }
    out << to_json().dump(2) << '\n';
}

double cumulative_prob(const OrdinalModel &model, const FeatureVector &x, int k) {
    if (k < 1 || k > kThresholdCount) {
        throw Error{ErrorCode::invalid_input, fmt::format("cumulative index {} outside 1..4", k)};
    }
    return link_cdf(model.link, model.thresholds(k - 1) + x.dot(model.beta));
}

SrhDistribution predict_proba_eta(const OrdinalModel &model, double eta) {
    SrhDistribution p;
    double previous = 0.0;
    for (int k = 0; k < kThresholdCount; ++k) {
        const double cumulative = link_cdf(model.link, model.thresholds(k) + eta);
        p(k) = std::max(0.0, cumulative - previous);
        previous = std::max(previous, cumulative);
    }
    p(kThresholdCount) = link_sf(model.link, model.thresholds(kThresholdCount - 1) + eta);
    return p / p.sum();
}

SrhDistribution predict_proba(const OrdinalModel &model, const FeatureVector &x) {
    if (x.size() != model.beta.size()) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("feature vector has {} entries, model expects {}", x.size(),
                                model.beta.size())};
    }
    return predict_proba_eta(model, x.dot(model.beta));
}

SrhCategory sample_from(const SrhDistribution &distribution, RngEngine &rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    for (int k = 0; k < kSrhCategories - 1; ++k) {
        cumulative += distribution(k);
        if (u < cumulative) {
            return static_cast<SrhCategory>(k);
        }
    }
    return static_cast<SrhCategory>(kSrhCategories - 1);
}

SrhCategory sample_category(const OrdinalModel &model, const FeatureVector &x, RngEngine &rng) {
    return sample_from(predict_proba(model, x), rng);
}

void TrainingSet::add(const FeatureVector &x, SrhCategory y, double weight) {
    if (labels_.empty() && features_ == 0) {
        features_ = static_cast<std::size_t>(x.size());
    }
    if (static_cast<std::size_t>(x.size()) != features_) {
        throw Error{ErrorCode::invalid_input,
                    fmt::format("row has {} features, expected {}", x.size(), features_)};
    }
    values_.insert(values_.end(), x.data(), x.data() + x.size());
    labels_.push_back(y);
    weights_.push_back(weight);
}

void TrainingSet::reserve(std::size_t rows) {
    values_.reserve(rows * features_);
    labels_.reserve(rows);
    weights_.reserve(rows);
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
TrainingSet::features() const {
    return {values_.data(), static_cast<Eigen::Index>(labels_.size()),
            static_cast<Eigen::Index>(features_)};
}

void TrainingSet::validate() const {
    bool lowest = false;
    bool highest = false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
            throw Error{ErrorCode::invalid_input, fmt::format("row {} has invalid weight {}", i, weights_[i])};
        }
        if (weights_[i] > 0.0) {
            lowest = lowest || labels_[i] == SrhCategory::very_good;
            highest = highest || labels_[i] == SrhCategory::very_bad;
        }
    }
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
        throw Error{ErrorCode::invalid_input, "features must be finite"};
    }
    if (!lowest || !highest) {
        throw Error{ErrorCode::invalid_input,
                    "training data must contain both Very Good and Very Bad responses"};
    }
}

Eigen::VectorXd pack_parameters(const OrdinalModel &model) {
    model.validate();
    const auto p = model.beta.size();
    Eigen::VectorXd theta(p + kThresholdCount);
    theta.head(p) = model.beta;
    theta(p) = model.thresholds(0);
    for (int k = 1; k < kThresholdCount; ++k) {
        theta(p + k) = std::log(model.thresholds(k) - model.thresholds(k - 1));
    }
    return theta;
}

OrdinalModel unpack_parameters(const Eigen::VectorXd &theta, Link link,
                               std::string schema_fingerprint) {
    if (theta.size() < kThresholdCount) {
        throw Error{ErrorCode::invalid_input, "parameter vector too short"};
    }
    const auto p = theta.size() - kThresholdCount;
    OrdinalModel model;
    model.beta = theta.head(p);
    model.thresholds = thresholds_from(theta, p);
    model.link = link;
    model.schema_fingerprint = std::move(schema_fingerprint);
    return model;
}

double log_likelihood(const OrdinalModel &model, const TrainingSet &data) {
    if (data.empty()) {
        return 0.0;
    }
    const Objective objective{data, model.link, Eigen::VectorXd::Zero(data.features().cols()), 1};
    const auto eval = objective.evaluate(pack_parameters(model), 0);
    warn_clamped(eval.clamped);
    return checked(eval.ll);
}

Eigen::VectorXd gradient(const OrdinalModel &model, const TrainingSet &data) {
    const auto theta = pack_parameters(model);
    if (data.empty()) {
        return Eigen::VectorXd::Zero(theta.size());
    }
    const Objective objective{data, model.link, Eigen::VectorXd::Zero(data.features().cols()), 1};
    const auto eval = objective.evaluate(theta, 1);
    warn_clamped(eval.clamped);
    checked(eval.ll);
    return eval.g;
}

FitResult fit(const TrainingSet &input, Link link, const FitOptions &options) {
    input.validate();
    if (options.max_iterations < 1 || !(options.gradient_tolerance > 0.0) || options.ridge < 0.0) {
        throw Error{ErrorCode::invalid_config, "invalid optimizer options"};
    }
    const auto data = canonical_order(input);
    // A category nobody in the data has leaves its coefficient unidentified; a unit penalty on
    // that column alone pins it at zero without touching the others.
    Eigen::VectorXd ridge = Eigen::VectorXd::Constant(data.features().cols(), options.ridge);
    {
        const Eigen::Map<const Eigen::VectorXd> w(data.weights().data(), static_cast<Eigen::Index>(data.size()));
        const Eigen::VectorXd exposure = data.features().cwiseAbs().transpose() * w;
        for (Eigen::Index j = 0; j < exposure.size(); ++j) {
            if (exposure(j) == 0.0) {
                spdlog::warn("feature column {} is zero for every weighted row; its coefficient is fixed at 0", j);
                ridge(j) = std::max(ridge(j), 1.0);
            }
        }
    }
    const Objective objective{data, link, ridge, options.workers};
    const auto p = objective.feature_count();

    Eigen::VectorXd theta = initial_parameters(data, link);
    auto current = objective.evaluate(theta, 2);
    checked(current.ll);

    auto improves = [&](const Eigen::VectorXd &direction, double slope, Eigen::VectorXd &next,
                        Evaluation &trial) {
        double step = 1.0;
        for (int attempt = 0; attempt < 60; ++attempt, step *= 0.5) {
            next = theta + step * direction;
            trial = objective.evaluate(next, 0);
            if (std::isfinite(trial.ll) && trial.ll >= current.ll + 1e-4 * step * slope) {
                return true;
            }
        }
        return false;
    };

    FitResult result;
    for (int iteration = 0;; ++iteration) {
        const double norm = current.g.lpNorm<Eigen::Infinity>();
        if (norm < options.gradient_tolerance) {
            result.iterations = iteration;
            result.gradient_norm = norm;
            break;
        }
        if (iteration >= options.max_iterations) {
            warn_separation(theta.head(p));
            throw Error{ErrorCode::nonconvergence,
                        fmt::format("no convergence after {} iterations; gradient max-norm {:.3e}",
                                    iteration, norm)};
        }

        Eigen::VectorXd next;
        Evaluation trial;
        bool accepted = false;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt{-current.h};
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 0.0) {
            const Eigen::VectorXd direction = ldlt.solve(current.g);
            const double slope = current.g.dot(direction);
            if (direction.allFinite() && slope > 0.0) {
                // When the predicted gain is below the rounding noise of the objective the line
                // search cannot see progress, so the full Newton step is taken directly.
                if (0.5 * slope <= 64.0 * std::numeric_limits<double>::epsilon() *
                                       std::max(1.0, std::abs(current.ll))) {
                    next = theta + direction;
                    accepted = true;
                } else {
                    accepted = improves(direction, slope, next, trial);
                }
            }
        }
        if (!accepted) {
            const Eigen::VectorXd direction = current.g / std::max(1.0, current.g.norm());
            accepted = improves(direction, current.g.dot(direction), next, trial);
        }
        if (!accepted) {
            warn_separation(theta.head(p));
            throw Error{ErrorCode::nonconvergence,
                        fmt::format("line search failed at iteration {}; gradient max-norm {:.3e}",
                                    iteration, norm)};
        }
        theta = next;
        current = objective.evaluate(theta, 2);
        checked(current.ll);
    }

    warn_clamped(current.clamped);
    result.model = unpack_parameters(theta, link, options.schema_fingerprint);
    result.log_likelihood = current.ll;
    warn_separation(result.model.beta);
    return result;
}

std::vector<CoefficientEffect> summarize(const OrdinalModel &model,
                                         const std::vector<std::string> &feature_names) {
    if (feature_names.size() != static_cast<std::size_t>(model.beta.size())) {
        throw Error{ErrorCode::invalid_input, "feature names do not match the model length"};
    }
    std::vector<CoefficientEffect> effects;
    effects.reserve(feature_names.size());
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        const double b = model.beta(static_cast<Eigen::Index>(i));
        effects.push_back({feature_names[i], b, b > 0.0 ? "better" : (b < 0.0 ? "worse" : "none")});
    }
    std::stable_sort(effects.begin(), effects.end(), [](const auto &lhs, const auto &rhs) {
        return std::abs(lhs.coefficient) > std::abs(rhs.coefficient);
    });
    return effects;
}

void write_summary(const std::filesystem::path &path, const std::vector<CoefficientEffect> &effects) {
    CsvWriter out{path, {"rank", "feature", "coefficient", "abs_coefficient", "effect_on_srh"}};
    int rank = 1;
    for (const auto &e : effects) {
        out.write_row({std::to_string(rank++), e.feature, format_real(e.coefficient),
                       format_real(std::abs(e.coefficient)), e.direction});
    }
    out.close();
}

} // namespace srh
