/* Copyright 2026 The UDOS Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>

#include "udos/errors.hpp"

namespace udos {

inline constexpr double kIntensityMin = 0.0;
inline constexpr double kIntensityMax = 255.0;

/// Height x width x channels array of intensities, stored interleaved
/// (channel fastest, then column, then row) in one Eigen column array.
///
/// Images and perturbations share this layout so that element-wise
/// arithmetic between them is plain Eigen array arithmetic on `array()`.
template <typename Scalar>
class ImageTensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  ImageTensor() = default;
  ImageTensor(int height, int width, int channels)
      : height_(height), width_(width), channels_(channels),
        data_(Array::Zero(static_cast<Eigen::Index>(height) * width * channels)) {
    if (height <= 0 || width <= 0 || channels <= 0) {
      throw ConfigError("ImageTensor: dimensions must be positive");
    }
  }
  ImageTensor(int height, int width, int channels, Array data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (data_.size() != static_cast<Eigen::Index>(height) * width * channels) {
      throw ConfigError("ImageTensor: data size does not match shape");
    }
  }

  static ImageTensor zeros_like(const ImageTensor& other) {
    return ImageTensor(other.height_, other.width_, other.channels_);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Eigen::Index offset(int y, int x, int c) const {
    return (static_cast<Eigen::Index>(y) * width_ + x) * channels_ + c;
  }
  Scalar& operator()(int y, int x, int c) { return data_[offset(y, x, c)]; }
  Scalar operator()(int y, int x, int c) const { return data_[offset(y, x, c)]; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }

  bool same_shape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  template <typename Other>
  ImageTensor<Other> cast() const {
    return ImageTensor<Other>(height_, width_, channels_, data_.template cast<Other>());
  }

  bool operator==(const ImageTensor& other) const {
    return same_shape(other) && (data_ == other.data_).all();
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  Array data_;
};

/// Image-shaped additive tensor together with its L-infinity budget.
template <typename Scalar>
struct Perturbation {
  ImageTensor<Scalar> data;
  Scalar xi = Scalar(0);

  static Perturbation zeros(int height, int width, int channels, Scalar xi) {
    return Perturbation{ImageTensor<Scalar>(height, width, channels), xi};
  }
  static Perturbation zeros_like(const ImageTensor<Scalar>& shape, Scalar xi) {
    return Perturbation{ImageTensor<Scalar>::zeros_like(shape), xi};
  }

  bool operator==(const Perturbation& other) const {
    return xi == other.xi && data == other.data;
  }
};

using Image = ImageTensor<double>;
using PerturbationD = Perturbation<double>;

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ConfigError(std::string(what) + ": tensor shapes differ");
  }
}

enum class NormKind { kL0, kL1, kL2, kLinf };

template <typename Derived>
typename Derived::Scalar norm_l0(const Eigen::ArrayBase<Derived>& x) {
  return static_cast<typename Derived::Scalar>((x != 0).count());
}

template <typename Derived>
typename Derived::Scalar norm_l1(const Eigen::ArrayBase<Derived>& x) {
  return x.abs().sum();
}

template <typename Derived>
typename Derived::Scalar norm_l2(const Eigen::ArrayBase<Derived>& x) {
  return std::sqrt(x.square().sum());
}

template <typename Derived>
typename Derived::Scalar norm_linf(const Eigen::ArrayBase<Derived>& x) {
  return x.size() == 0 ? typename Derived::Scalar(0) : x.abs().maxCoeff();
}

/// p-norm of a tensor; kL0 counts nonzero entries and kLinf is the largest
/// absolute entry.
template <typename Scalar>
Scalar compute_norm(const ImageTensor<Scalar>& v, NormKind p) {
  switch (p) {
    case NormKind::kL0: return norm_l0(v.array());
    case NormKind::kL1: return norm_l1(v.array());
    case NormKind::kL2: return norm_l2(v.array());
    case NormKind::kLinf: return norm_linf(v.array());
  }
  return Scalar(0);
}

template <typename Scalar>
Scalar compute_norm(const Perturbation<Scalar>& v, NormKind p) {
  return compute_norm(v.data, p);
}

/// L1 norm divided by the number of entries (pixels times channels).
template <typename Scalar>
Scalar normalized_l1(const ImageTensor<Scalar>& v) {
  return v.size() == 0 ? Scalar(0) : norm_l1(v.array()) / static_cast<Scalar>(v.size());
}

/// Element-wise clamp to [-xi, xi]. Idempotent.
template <typename Scalar>
Perturbation<Scalar> project_linf(Perturbation<Scalar> v, Scalar xi) {
  if (!(xi >= Scalar(0))) {
    throw ConfigError("project_linf: budget must be non-negative");
  }
  v.data.array() = v.data.array().max(-xi).min(xi);
  v.xi = xi;
  return v;
}

template <typename Scalar>
Perturbation<Scalar> project_linf(Perturbation<Scalar> v) {
  const Scalar xi = v.xi;
  return project_linf(std::move(v), xi);
}

/// Clamp to the valid intensity scale.
template <typename Scalar>
ImageTensor<Scalar> clamp_intensity(ImageTensor<Scalar> image) {
  image.array() = image.array().max(Scalar(kIntensityMin)).min(Scalar(kIntensityMax));
  return image;
}

/// clamp(image + v) on the intensity scale.
template <typename Scalar>
ImageTensor<Scalar> apply_perturbation(const ImageTensor<Scalar>& image, const ImageTensor<Scalar>& v) {
  if (!image.same_shape(v)) {
    throw ConfigError("apply_perturbation: tensor shapes differ");
  }
  ImageTensor<Scalar> out = image;
  out.array() += v.array();
  return clamp_intensity(std::move(out));
}

template <typename Scalar>
bool all_finite(const ImageTensor<Scalar>& t) {
  return t.array().isFinite().all();
}

}  // namespace udos
