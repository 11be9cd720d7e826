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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "udos/dataset.hpp"
#include "udos/geometry.hpp"
#include "udos/tensor.hpp"

namespace udos {

enum class Activation { kSiLU, kIdentity };

struct ConvSpec {
  int out_channels = 0;
  int kernel = 3;  // odd; "same" zero padding of kernel / 2
  int stride = 1;

  bool operator==(const ConvSpec&) const = default;
};

/// Single-shot grid detector layout: a stack of convolutions with one shared
/// activation, followed by a 1x1 head that emits, for every grid cell,
/// [objectness logit, K class logits, tx, ty, tw, th].
///
/// Pixels enter the network as (x - 127.5) / 64. Class probabilities are a
/// softmax over foreground classes only; there is no background class.
struct Architecture {
  int input_height = 64;
  int input_width = 64;
  int input_channels = 3;
  int num_classes = 5;
  std::vector<ConvSpec> backbone;
  Activation activation = Activation::kSiLU;

  int head_channels() const { return 5 + num_classes; }
  int grid_height() const;
  int grid_width() const;
  double cell_height() const { return static_cast<double>(input_height) / grid_height(); }
  double cell_width() const { return static_cast<double>(input_width) / grid_width(); }

  void validate() const;  // throws ConfigError
  bool operator==(const Architecture&) const = default;
};

/// 64x64x3 input, 16x16 grid: conv3x3 widths 8, 16, 32, 32, 32, 32 with
/// strides 1, 2, 2, 1, 1, 1.
Architecture default_architecture(int num_classes = 5);

template <typename Scalar>
struct ConvLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  Matrix weight;  // out_channels x (kernel * kernel * in_channels), column (ky * k + kx) * in_channels + c
  Vector bias;

  bool operator==(const ConvLayer& other) const {
    return in_channels == other.in_channels && out_channels == other.out_channels && kernel == other.kernel &&
           stride == other.stride && weight.rows() == other.weight.rows() &&
           weight.cols() == other.weight.cols() && (weight.array() == other.weight.array()).all() &&
           (bias.array() == other.bias.array()).all();
  }
};

/// Weights of the network: one ConvLayer per backbone entry, then the head.
template <typename Scalar>
struct DetectorWeights {
  Architecture arch;
  std::vector<ConvLayer<Scalar>> layers;

  bool operator==(const DetectorWeights& other) const { return arch == other.arch && layers == other.layers; }

  template <typename Other>
  DetectorWeights<Other> cast() const {
    DetectorWeights<Other> out;
    out.arch = arch;
    for (const auto& l : layers) {
      ConvLayer<Other> c;
      c.in_channels = l.in_channels;
      c.out_channels = l.out_channels;
      c.kernel = l.kernel;
      c.stride = l.stride;
      c.weight = l.weight.template cast<Other>();
      c.bias = l.bias.template cast<Other>();
      out.layers.push_back(std::move(c));
    }
    return out;
  }
};

/// He-normal initialisation with zero biases, deterministic in `seed`.
template <typename Scalar>
DetectorWeights<Scalar> init_weights(const Architecture& arch, std::uint64_t seed);

/// Raw head output: head_channels x (grid_height * grid_width); column index
/// is gy * grid_width + gx.
template <typename Scalar>
struct RawPredictions {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int grid_height = 0;
  int grid_width = 0;
  int num_classes = 0;
  Matrix values;

  int cells() const { return grid_height * grid_width; }
  Scalar objectness_logit(int cell) const { return values(0, cell); }
  auto class_logits(int cell) const { return values.col(cell).segment(1, num_classes); }
  auto box_offsets(int cell) const { return values.col(cell).segment(1 + num_classes, 4); }
};

/// Activations retained for back-propagation.
template <typename Scalar>
struct ForwardPass {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct LayerCache {
    int in_height = 0;
    int in_width = 0;
    int out_height = 0;
    int out_width = 0;
    Matrix columns;         // im2col of the layer input
    Matrix pre_activation;  // out_channels x (out_height * out_width)
  };

  std::vector<LayerCache> layers;
  RawPredictions<Scalar> output;
};

template <typename Scalar>
ForwardPass<Scalar> forward_pass(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image);

/// Deterministic forward pass. Throws ConfigError on shape mismatch.
template <typename Scalar>
RawPredictions<Scalar> forward(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image);

/// Parameter gradients, laid out like DetectorWeights::layers.
template <typename Scalar>
struct WeightGradients {
  std::vector<ConvLayer<Scalar>> layers;

  static WeightGradients zeros_like(const DetectorWeights<Scalar>& weights);
};

/// Back-propagates d(loss)/d(head values) to the input image (intensity
/// units). Accumulates parameter gradients into `weight_grads` when given.
template <typename Scalar>
ImageTensor<Scalar> backward(const DetectorWeights<Scalar>& weights, const ForwardPass<Scalar>& pass,
                             const typename RawPredictions<Scalar>::Matrix& d_head,
                             WeightGradients<Scalar>* weight_grads = nullptr);

/// A differentiable scalar functional of the head output. Returns the value
/// and writes d(value)/d(values) into `d_head` (pre-sized, zeroed).
template <typename Scalar>
using HeadLoss = std::function<Scalar(const RawPredictions<Scalar>& raw, typename RawPredictions<Scalar>::Matrix& d_head)>;

template <typename Scalar>
struct LossGradient {
  Scalar value;
  ImageTensor<Scalar> gradient;
};

/// Value and input gradient of `loss(forward(image))`. Throws NumericalError
/// when the value or any gradient entry is non-finite.
template <typename Scalar>
LossGradient<Scalar> input_gradient(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image,
                                    const HeadLoss<Scalar>& loss);

// ---------------------------------------------------------------------------
// Decoding and detection.

inline constexpr double kObjectnessGate = 0.5;
inline constexpr double kNmsIou = 0.5;

struct Detection {
  Box box;
  Eigen::VectorXd class_probs;  // softmax over foreground classes
  int class_id = 0;             // argmax, lowest id on ties
  double p_obj = 0.0;           // max of class_probs
  int cell = 0;
};

using DetectionSet = std::vector<Detection>;

/// Index of the largest entry; the first one wins ties.
template <typename Derived>
int argmax_first(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// Box decoded from one cell's offsets.
Box decode_box(const Architecture& arch, int cell, double tx, double ty, double tw, double th);

/// Proposals: every cell whose objectness probability exceeds the gate,
/// ordered by cell index, without thresholding or suppression.
template <typename Scalar>
DetectionSet decode_proposals(const Architecture& arch, const RawPredictions<Scalar>& raw);

/// Greedy per-class suppression: proposals are visited by descending p_obj
/// (cell index breaks ties) and dropped when they overlap a kept box of the
/// same class with IoU above `iou_threshold`. Output keeps visit order.
DetectionSet non_max_suppression(DetectionSet proposals, double iou_threshold = kNmsIou);

/// Proposals with p_obj > theta, after non-maximum suppression.
template <typename Scalar>
DetectionSet detect(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image, double theta);

// ---------------------------------------------------------------------------
// Training.

struct TrainOptions {
  int epochs = 40;
  int batch_size = 8;
  double learning_rate = 2e-3;
  double noobj_weight = 0.5;
  double box_weight = 1.0;
  double label_smoothing = 0.2;
  std::uint64_t seed = 1;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

/// YOLO-style supervised loss on one image: objectness BCE on every cell,
/// softmax cross-entropy and box regression on every cell whose centre lies
/// inside an object box, plus the cell holding the box centre (the larger
/// object wins a shared cell). Class targets are
/// smoothed: (1 - label_smoothing) on the true class plus label_smoothing / K
/// everywhere.
template <typename Scalar>
Scalar training_loss(const Architecture& arch, const RawPredictions<Scalar>& raw,
                     const std::vector<GroundTruthObject>& objects, double noobj_weight, double box_weight,
                     double label_smoothing, typename RawPredictions<Scalar>::Matrix& d_head);

/// Mini-batch Adam on `dataset`, deterministic in options.seed. Throws
/// NumericalError when the loss diverges.
template <typename Scalar>
DetectorWeights<Scalar> train(const Dataset& dataset, const Architecture& arch, const TrainOptions& options);

// ---------------------------------------------------------------------------
// Checkpoints.

std::string serialize_weights(const DetectorWeights<double>& weights);
DetectorWeights<double> deserialize_weights(const std::string& text, const std::string& origin = "<memory>");
void save_weights(const DetectorWeights<double>& weights, const std::filesystem::path& path);
DetectorWeights<double> load_weights(const std::filesystem::path& path);

/// FNV-1a digest of the serialized checkpoint.
std::string weights_digest(const DetectorWeights<double>& weights);

}  // namespace udos
