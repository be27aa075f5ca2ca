#pragma once

#include "srh/population.hpp"

#include <Eigen/Core>

#include <cmath>

namespace srh {

template <typename Scalar>
using AlrVector = Eigen::Matrix<Scalar, kSrhCategories - 1, 1>;

/// Zero parts are raised to this floor before log-ratios are taken.
inline constexpr double kCompositionFloor = 1e-6;

namespace detail {
void warn_floored_composition(int zero_parts);
}

/// Closure: rescales a non-negative vector to sum to one.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, 1>
closure(const Eigen::MatrixBase<Derived> &x) {
    return x / x.sum();
}

/// Replaces non-positive parts by `floor` and re-closes. Returns the input unchanged when every
/// part is already positive.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, 1>
floor_composition(const Eigen::MatrixBase<Derived> &x,
                  typename Derived::Scalar floor = typename Derived::Scalar(kCompositionFloor)) {
    const auto zeros = static_cast<int>((x.array() <= 0).count());
    if (zeros == 0) {
        return x;
    }
    detail::warn_floored_composition(zeros);
    return closure(x.cwiseMax(floor));
}

/// Additive log-ratio against the last part ("Very Bad").
template <typename Derived>
AlrVector<typename Derived::Scalar> alr(const Eigen::MatrixBase<Derived> &x) {
    using Scalar = typename Derived::Scalar;
    const Composition<Scalar> positive = floor_composition(x.template cast<Scalar>().eval());
    return (positive.template head<kSrhCategories - 1>().array() / positive(kSrhCategories - 1))
        .log()
        .matrix();
}

/// Inverse additive log-ratio: closure of exp([y, 0]). The maximum is subtracted before
/// exponentiation so large log-ratios cannot overflow.
template <typename Derived>
Composition<typename Derived::Scalar> alr_inv(const Eigen::MatrixBase<Derived> &y) {
    using Scalar = typename Derived::Scalar;
    Composition<Scalar> z;
    z << y, Scalar(0);
    z.array() -= z.maxCoeff();
    return closure(z.array().exp().matrix());
}

} // namespace srh
