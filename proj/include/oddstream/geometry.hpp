/*
 * Copyright 2026 The oddstream Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "oddstream/error.hpp"

namespace oddstream {

template <typename Scalar>
using Feature = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using FeatureList = std::vector<Feature<Scalar>>;

using FeatureVector = Feature<double>;
using FeatureVectors = FeatureList<double>;

/// Norms below this are treated as zero by normalize().
inline constexpr double kMinNorm = 1e-30;

template <typename Derived>
bool AllFinite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

template <typename DerivedA, typename DerivedB>
void CheckSameDimension(const Eigen::MatrixBase<DerivedA>& a,
                        const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimension " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
}

/// Projects `v` onto the unit sphere.
template <typename Derived>
Feature<typename Derived::Scalar> Normalize(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (!AllFinite(v)) {
    throw Error(ErrorCode::kNonFinite, "feature has a NaN or Inf component");
  }
  // stableNorm rescales internally, so tiny-but-nonzero vectors do not
  // underflow to a zero norm.
  const Scalar norm = v.stableNorm();
  if (!(norm > Scalar(kMinNorm))) {
    throw Error(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  }
  return v / norm;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar SquaredDistance(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
  CheckSameDimension(a, b);
  return (a - b).squaredNorm();
}

/// Euclidean distance.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar Distance(const Eigen::MatrixBase<DerivedA>& a,
                                   const Eigen::MatrixBase<DerivedB>& b) {
  using std::sqrt;
  return sqrt(SquaredDistance(a, b));
}

/// Copies a plain coordinate list into a feature, rejecting non-finite input.
inline FeatureVector MakeFeature(const std::vector<double>& values) {
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyInput, "feature must have at least one component");
  }
  FeatureVector v = Eigen::Map<const FeatureVector>(values.data(),
                                                    static_cast<Eigen::Index>(values.size()));
  if (!AllFinite(v)) {
    throw Error(ErrorCode::kNonFinite, "feature has a NaN or Inf component");
  }
  return v;
}

}  // namespace oddstream
