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

#include "udos/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "udos/errors.hpp"
#include "udos/io.hpp"

namespace udos {

using nlohmann::json;

namespace {

// Network input is (x - kInputMean) / kInputStd.
constexpr double kInputMean = 127.5;
constexpr double kInputStd = 64.0;
constexpr double kInputScale = 1.0 / kInputStd;
constexpr double kInputShift = kInputMean / kInputStd;
// Cells whose centre lies in the middle kCenterRegion fraction of an object
// box, and always the cell holding the box centre, are trained as positives.
constexpr double kCenterRegion = 1.0;
constexpr double kLogSizeClamp = 6.0;

int conv_out(int in, int kernel, int stride) {
  const int pad = kernel / 2;
  return (in + 2 * pad - kernel) / stride + 1;
}

template <typename Matrix>
Matrix im2col(const Matrix& input, int channels, int height, int width, int kernel, int stride, int out_h,
              int out_w) {
  const int pad = kernel / 2;
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(kernel) * kernel * channels,
                             static_cast<Eigen::Index>(out_h) * out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const Eigen::Index j = static_cast<Eigen::Index>(oy) * out_w + ox;
      for (int ky = 0; ky < kernel; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= height) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= width) continue;
          cols.col(j).segment((ky * kernel + kx) * channels, channels) =
              input.col(static_cast<Eigen::Index>(iy) * width + ix);
        }
      }
    }
  }
  return cols;
}

template <typename Matrix>
Matrix col2im(const Matrix& cols, int channels, int height, int width, int kernel, int stride, int out_h,
              int out_w) {
  const int pad = kernel / 2;
  Matrix out = Matrix::Zero(channels, static_cast<Eigen::Index>(height) * width);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const Eigen::Index j = static_cast<Eigen::Index>(oy) * out_w + ox;
      for (int ky = 0; ky < kernel; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= height) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= width) continue;
          out.col(static_cast<Eigen::Index>(iy) * width + ix) +=
              cols.col(j).segment((ky * kernel + kx) * channels, channels);
        }
      }
    }
  }
  return out;
}

template <typename Matrix>
Matrix activate(const Matrix& z, Activation act) {
  using Scalar = typename Matrix::Scalar;
  if (act == Activation::kIdentity) return z;
  return (z.array() / (Scalar(1) + (-z.array()).exp())).matrix();
}

template <typename Matrix>
Matrix activation_derivative(const Matrix& z, Activation act) {
  using Scalar = typename Matrix::Scalar;
  if (act == Activation::kIdentity) return Matrix::Ones(z.rows(), z.cols());
  auto s = (Scalar(1) / (Scalar(1) + (-z.array()).exp()));
  return (s * (Scalar(1) + z.array() * (Scalar(1) - s))).matrix();
}

template <typename Scalar>
ImageTensor<Scalar> backward_impl(const DetectorWeights<Scalar>& weights, const ForwardPass<Scalar>& pass,
                                  const typename RawPredictions<Scalar>::Matrix& d_head,
                                  WeightGradients<Scalar>* grads, bool want_input) {
  using Matrix = typename ConvLayer<Scalar>::Matrix;
  const Architecture& arch = weights.arch;
  if (d_head.rows() != pass.output.values.rows() || d_head.cols() != pass.output.values.cols()) {
    throw ConfigError("backward: head gradient has the wrong shape");
  }
  const int n_layers = static_cast<int>(weights.layers.size());
  Matrix d_out = d_head;
  for (int l = n_layers - 1; l >= 0; --l) {
    const ConvLayer<Scalar>& layer = weights.layers[static_cast<std::size_t>(l)];
    const auto& cache = pass.layers[static_cast<std::size_t>(l)];
    const bool is_head = (l == n_layers - 1);
    Matrix d_pre = is_head ? d_out
                           : Matrix(d_out.array() * activation_derivative(cache.pre_activation, arch.activation).array());
    if (grads != nullptr) {
      ConvLayer<Scalar>& g = grads->layers[static_cast<std::size_t>(l)];
      g.weight.noalias() += d_pre * cache.columns.transpose();
      g.bias += d_pre.rowwise().sum();
    }
    if (l == 0 && !want_input) break;
    Matrix d_cols = layer.weight.transpose() * d_pre;
    d_out = col2im(d_cols, layer.in_channels, cache.in_height, cache.in_width, layer.kernel, layer.stride,
                   cache.out_height, cache.out_width);
  }
  if (!want_input) return ImageTensor<Scalar>();
  // d_out is now channels x (H * W), which is the interleaved image layout.
  typename ImageTensor<Scalar>::Array flat =
      Eigen::Map<const typename ImageTensor<Scalar>::Array>(d_out.data(), d_out.size()) * Scalar(kInputScale);
  return ImageTensor<Scalar>(arch.input_height, arch.input_width, arch.input_channels, std::move(flat));
}

void check_image_shape(const Architecture& arch, int h, int w, int c) {
  if (h != arch.input_height || w != arch.input_width || c != arch.input_channels) {
    throw ConfigError("detector: image shape " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                      std::to_string(c) + " does not match architecture " + std::to_string(arch.input_height) +
                      "x" + std::to_string(arch.input_width) + "x" + std::to_string(arch.input_channels));
  }
}

}  // namespace

int Architecture::grid_height() const {
  int h = input_height;
  for (const auto& c : backbone) h = conv_out(h, c.kernel, c.stride);
  return h;
}

int Architecture::grid_width() const {
  int w = input_width;
  for (const auto& c : backbone) w = conv_out(w, c.kernel, c.stride);
  return w;
}

void Architecture::validate() const {
  if (input_height <= 0 || input_width <= 0 || input_channels <= 0) {
    throw ConfigError("Architecture: input dimensions must be positive");
  }
  if (num_classes < 1) {
    throw ConfigError("Architecture: at least one class is required");
  }
  for (const auto& c : backbone) {
    if (c.out_channels <= 0 || c.kernel <= 0 || c.kernel % 2 == 0 || c.stride <= 0) {
      throw ConfigError("Architecture: convolutions need positive width, odd kernel and positive stride");
    }
  }
  if (grid_height() <= 0 || grid_width() <= 0) {
    throw ConfigError("Architecture: grid collapses to zero cells");
  }
}

Architecture default_architecture(int num_classes) {
  Architecture arch;
  arch.num_classes = num_classes;
  arch.backbone = {{8, 3, 1}, {16, 3, 2}, {32, 3, 2}, {32, 3, 1}, {32, 3, 1}, {32, 3, 1}};
  return arch;
}

template <typename Scalar>
DetectorWeights<Scalar> init_weights(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  DetectorWeights<Scalar> w;
  w.arch = arch;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int in = arch.input_channels;
  auto add = [&](int out, int kernel, int stride, double gain) {
    ConvLayer<Scalar> layer;
    layer.in_channels = in;
    layer.out_channels = out;
    layer.kernel = kernel;
    layer.stride = stride;
    const int fan_in = kernel * kernel * in;
    const double sd = gain * std::sqrt(2.0 / fan_in);
    layer.weight.resize(out, fan_in);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = static_cast<Scalar>(sd * normal(rng));
    }
    layer.bias = ConvLayer<Scalar>::Vector::Zero(out);
    w.layers.push_back(std::move(layer));
    in = out;
  };
  for (const auto& c : arch.backbone) add(c.out_channels, c.kernel, c.stride, 1.0);
  add(arch.head_channels(), 1, 1, 0.1);
  return w;
}

template <typename Scalar>
ForwardPass<Scalar> forward_pass(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image) {
  using Matrix = typename ConvLayer<Scalar>::Matrix;
  const Architecture& arch = weights.arch;
  check_image_shape(arch, image.height(), image.width(), image.channels());
  if (weights.layers.size() != arch.backbone.size() + 1) {
    throw ConfigError("detector: weights do not match architecture");
  }

  ForwardPass<Scalar> pass;
  pass.layers.resize(weights.layers.size());
  Matrix activations = (Eigen::Map<const Matrix>(image.array().data(), arch.input_channels,
                                                 static_cast<Eigen::Index>(arch.input_height) * arch.input_width)
                            .array() *
                            Scalar(kInputScale) -
                        Scalar(kInputShift))
                           .matrix();
  int h = arch.input_height;
  int w = arch.input_width;
  const std::size_t n_layers = weights.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const ConvLayer<Scalar>& layer = weights.layers[l];
    auto& cache = pass.layers[l];
    cache.in_height = h;
    cache.in_width = w;
    cache.out_height = conv_out(h, layer.kernel, layer.stride);
    cache.out_width = conv_out(w, layer.kernel, layer.stride);
    if (layer.kernel == 1 && layer.stride == 1) {
      cache.columns = activations;
    } else {
      cache.columns = im2col(activations, layer.in_channels, h, w, layer.kernel, layer.stride, cache.out_height,
                             cache.out_width);
    }
    cache.pre_activation.noalias() = layer.weight * cache.columns;
    cache.pre_activation.colwise() += layer.bias;
    activations = (l + 1 == n_layers) ? cache.pre_activation : activate(cache.pre_activation, arch.activation);
    h = cache.out_height;
    w = cache.out_width;
  }
  pass.output.grid_height = h;
  pass.output.grid_width = w;
  pass.output.num_classes = arch.num_classes;
  pass.output.values = std::move(activations);
  return pass;
}

template <typename Scalar>
RawPredictions<Scalar> forward(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image) {
  return forward_pass(weights, image).output;
}

template <typename Scalar>
WeightGradients<Scalar> WeightGradients<Scalar>::zeros_like(const DetectorWeights<Scalar>& weights) {
  WeightGradients g;
  g.layers = weights.layers;
  for (auto& l : g.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return g;
}

template <typename Scalar>
ImageTensor<Scalar> backward(const DetectorWeights<Scalar>& weights, const ForwardPass<Scalar>& pass,
                             const typename RawPredictions<Scalar>::Matrix& d_head,
                             WeightGradients<Scalar>* weight_grads) {
  return backward_impl(weights, pass, d_head, weight_grads, true);
}

template <typename Scalar>
LossGradient<Scalar> input_gradient(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image,
                                    const HeadLoss<Scalar>& loss) {
  ForwardPass<Scalar> pass = forward_pass(weights, image);
  typename RawPredictions<Scalar>::Matrix d_head =
      RawPredictions<Scalar>::Matrix::Zero(pass.output.values.rows(), pass.output.values.cols());
  const Scalar value = loss(pass.output, d_head);
  if (!std::isfinite(static_cast<double>(value)) || !d_head.allFinite()) {
    throw NumericalError("input_gradient: loss or head gradient is not finite");
  }
  ImageTensor<Scalar> grad = backward(weights, pass, d_head);
  if (!all_finite(grad)) {
    throw NumericalError("input_gradient: input gradient is not finite");
  }
  return LossGradient<Scalar>{value, std::move(grad)};
}

Box decode_box(const Architecture& arch, int cell, double tx, double ty, double tw, double th) {
  const int gw = arch.grid_width();
  const int gy = cell / gw;
  const int gx = cell % gw;
  const double cw = arch.cell_width();
  const double ch = arch.cell_height();
  const double cx = (gx + 0.5 + tx) * cw;
  const double cy = (gy + 0.5 + ty) * ch;
  const double bw = std::exp(std::clamp(tw, -kLogSizeClamp, kLogSizeClamp)) * cw;
  const double bh = std::exp(std::clamp(th, -kLogSizeClamp, kLogSizeClamp)) * ch;
  const double W = arch.input_width;
  const double H = arch.input_height;
  Box b{std::clamp(cx - 0.5 * bw, 0.0, W), std::clamp(cy - 0.5 * bh, 0.0, H), std::clamp(cx + 0.5 * bw, 0.0, W),
        std::clamp(cy + 0.5 * bh, 0.0, H)};
  // Keep the box non-degenerate after clipping.
  constexpr double kMinExtent = 1e-3;
  if (b.x2 - b.x1 < kMinExtent) {
    b.x1 = std::min(b.x1, W - kMinExtent);
    b.x2 = b.x1 + kMinExtent;
  }
  if (b.y2 - b.y1 < kMinExtent) {
    b.y1 = std::min(b.y1, H - kMinExtent);
    b.y2 = b.y1 + kMinExtent;
  }
  return b;
}

template <typename Scalar>
DetectionSet decode_proposals(const Architecture& arch, const RawPredictions<Scalar>& raw) {
  DetectionSet out;
  for (int cell = 0; cell < raw.cells(); ++cell) {
    const double objectness = sigmoid(static_cast<double>(raw.objectness_logit(cell)));
    if (!(objectness > kObjectnessGate)) continue;
    Detection d;
    d.cell = cell;
    d.class_probs = softmax(raw.class_logits(cell).template cast<double>());
    d.class_id = argmax_first(d.class_probs);
    d.p_obj = d.class_probs[d.class_id];
    const auto t = raw.box_offsets(cell).template cast<double>();
    d.box = decode_box(arch, cell, t[0], t[1], t[2], t[3]);
    out.push_back(std::move(d));
  }
  return out;
}

DetectionSet non_max_suppression(DetectionSet proposals, double iou_threshold) {
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (proposals[a].p_obj != proposals[b].p_obj) return proposals[a].p_obj > proposals[b].p_obj;
    return proposals[a].cell < proposals[b].cell;
  });
  DetectionSet kept;
  for (std::size_t idx : order) {
    const Detection& cand = proposals[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == cand.class_id && iou(k.box, cand.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(proposals[idx]));
  }
  return kept;
}

template <typename Scalar>
DetectionSet detect(const DetectorWeights<Scalar>& weights, const ImageTensor<Scalar>& image, double theta) {
  DetectionSet proposals = decode_proposals(weights.arch, forward(weights, image));
  std::erase_if(proposals, [&](const Detection& d) { return !(d.p_obj > theta); });
  return non_max_suppression(std::move(proposals));
}

// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar training_loss(const Architecture& arch, const RawPredictions<Scalar>& raw,
                     const std::vector<GroundTruthObject>& objects, double noobj_weight, double box_weight,
                     double label_smoothing, typename RawPredictions<Scalar>::Matrix& d_head) {
  const int gw = raw.grid_width;
  const int gh = raw.grid_height;
  const int K = raw.num_classes;
  const double cw = arch.cell_width();
  const double ch = arch.cell_height();

  // Positive cells per object; a cell shared by several objects keeps the
  // larger one.
  std::vector<int> owner(static_cast<std::size_t>(raw.cells()), -1);
  auto claim = [&](int gy, int gx, std::size_t i) {
    int& slot = owner[static_cast<std::size_t>(gy * gw + gx)];
    if (slot < 0 || objects[static_cast<std::size_t>(slot)].box.area() < objects[i].box.area()) {
      slot = static_cast<int>(i);
    }
  };
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const Box& b = objects[i].box;
    const double half_w = 0.5 * kCenterRegion * b.width();
    const double half_h = 0.5 * kCenterRegion * b.height();
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        const double px = (gx + 0.5) * cw;
        const double py = (gy + 0.5) * ch;
        if (std::abs(px - b.center_x()) <= half_w && std::abs(py - b.center_y()) <= half_h) claim(gy, gx, i);
      }
    }
    claim(std::clamp(static_cast<int>(b.center_y() / ch), 0, gh - 1),
          std::clamp(static_cast<int>(b.center_x() / cw), 0, gw - 1), i);
  }

  double loss = 0.0;
  for (int cell = 0; cell < raw.cells(); ++cell) {
    const int o = owner[static_cast<std::size_t>(cell)];
    const double logit = static_cast<double>(raw.objectness_logit(cell));
    const double p = sigmoid(logit);
    const double target = o >= 0 ? 1.0 : 0.0;
    const double weight = o >= 0 ? 1.0 : noobj_weight;
    // Softplus(logit) - target * logit, computed stably.
    const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
    loss += weight * (softplus - target * logit);
    d_head(0, cell) = static_cast<Scalar>(weight * (p - target));
    if (o < 0) continue;

    const GroundTruthObject& obj = objects[static_cast<std::size_t>(o)];
    const Eigen::VectorXd probs = softmax(raw.class_logits(cell).template cast<double>());
    for (int k = 0; k < K; ++k) {
      const double q = (k == obj.class_id ? 1.0 - label_smoothing : 0.0) + label_smoothing / K;
      loss += -q * std::log(std::max(probs[k], 1e-300));
      d_head(1 + k, cell) = static_cast<Scalar>(probs[k] - q);
    }

    const int gy = cell / gw;
    const int gx = cell % gw;
    const double target_tx = obj.box.center_x() / cw - (gx + 0.5);
    const double target_ty = obj.box.center_y() / ch - (gy + 0.5);
    const double target_tw = std::log(obj.box.width() / cw);
    const double target_th = std::log(obj.box.height() / ch);
    const auto t = raw.box_offsets(cell).template cast<double>();
    const double sx = t[0];
    const double sy = t[1];
    loss += box_weight * ((sx - target_tx) * (sx - target_tx) + (sy - target_ty) * (sy - target_ty) +
                          (t[2] - target_tw) * (t[2] - target_tw) + (t[3] - target_th) * (t[3] - target_th));
    d_head(1 + K, cell) = static_cast<Scalar>(box_weight * 2.0 * (sx - target_tx));
    d_head(2 + K, cell) = static_cast<Scalar>(box_weight * 2.0 * (sy - target_ty));
    d_head(3 + K, cell) = static_cast<Scalar>(box_weight * 2.0 * (t[2] - target_tw));
    d_head(4 + K, cell) = static_cast<Scalar>(box_weight * 2.0 * (t[3] - target_th));
  }
  return static_cast<Scalar>(loss);
}

template <typename Scalar>
DetectorWeights<Scalar> train(const Dataset& dataset, const Architecture& arch, const TrainOptions& options) {
  using Matrix = typename ConvLayer<Scalar>::Matrix;
  if (dataset.empty()) {
    throw ConfigError("train: dataset is empty");
  }
  if (options.epochs < 0 || options.batch_size < 1 || !(options.learning_rate > 0.0)) {
    throw ConfigError("train: epochs >= 0, batch_size >= 1 and learning_rate > 0 are required");
  }
  arch.validate();
  DetectorWeights<Scalar> weights = init_weights<Scalar>(arch, options.seed);
  WeightGradients<Scalar> m = WeightGradients<Scalar>::zeros_like(weights);
  WeightGradients<Scalar> v = WeightGradients<Scalar>::zeros_like(weights);

  std::vector<ImageTensor<Scalar>> images;
  images.reserve(dataset.size());
  for (const auto& s : dataset.samples) images.push_back(s.image.template cast<Scalar>());

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  long long step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      WeightGradients<Scalar> g = WeightGradients<Scalar>::zeros_like(weights);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        ForwardPass<Scalar> pass = forward_pass(weights, images[idx]);
        Matrix d_head = Matrix::Zero(pass.output.values.rows(), pass.output.values.cols());
        batch_loss += static_cast<double>(training_loss(arch, pass.output, dataset.samples[idx].objects,
                                                        options.noobj_weight, options.box_weight,
                                                        options.label_smoothing, d_head));
        backward_impl(weights, pass, d_head, &g, false);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss;
      const Scalar scale = Scalar(1.0 / static_cast<double>(end - start));
      ++step;
      const double lr_t = options.learning_rate * std::sqrt(1.0 - std::pow(kBeta2, static_cast<double>(step))) /
                          (1.0 - std::pow(kBeta1, static_cast<double>(step)));
      for (std::size_t l = 0; l < weights.layers.size(); ++l) {
        auto update = [&](auto& param, auto& grad, auto& m1, auto& m2) {
          grad *= scale;
          m1 = Scalar(kBeta1) * m1 + Scalar(1 - kBeta1) * grad;
          m2 = (Scalar(kBeta2) * m2.array() + Scalar(1 - kBeta2) * grad.array().square()).matrix();
          param.array() -= Scalar(lr_t) * m1.array() / (m2.array().sqrt() + Scalar(kEps));
        };
        update(weights.layers[l].weight, g.layers[l].weight, m.layers[l].weight, v.layers[l].weight);
        update(weights.layers[l].bias, g.layers[l].bias, m.layers[l].bias, v.layers[l].bias);
      }
    }
    for (const auto& layer : weights.layers) {
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
        throw NumericalError("train: weights became non-finite at epoch " + std::to_string(epoch));
      }
    }
    if (options.on_epoch) options.on_epoch(epoch, epoch_loss / static_cast<double>(dataset.size()));
  }
  return weights;
}

// ---------------------------------------------------------------------------

std::string serialize_weights(const DetectorWeights<double>& weights) {
  const Architecture& a = weights.arch;
  json backbone = json::array();
  for (const auto& c : a.backbone) {
    backbone.push_back({{"out_channels", c.out_channels}, {"kernel", c.kernel}, {"stride", c.stride}});
  }
  json layers = json::array();
  for (const auto& l : weights.layers) {
    // Row-major flattening of the weight matrix.
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    layers.push_back({{"in_channels", l.in_channels},
                      {"out_channels", l.out_channels},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  json doc = {{"format", "udos-grid-detector"},
              {"version", 1},
              {"architecture",
               {{"input_height", a.input_height},
                {"input_width", a.input_width},
                {"input_channels", a.input_channels},
                {"num_classes", a.num_classes},
                {"activation", a.activation == Activation::kSiLU ? "silu" : "identity"},
                {"backbone", backbone}}},
              {"layers", layers}};
  return doc.dump() + "\n";
}

DetectorWeights<double> deserialize_weights(const std::string& text, const std::string& origin) {
  DetectorWeights<double> w;
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "udos-grid-detector") {
      throw DataError(origin + ": not a detector checkpoint");
    }
    if (doc.at("version").get<int>() != 1) {
      throw DataError(origin + ": unsupported checkpoint version");
    }
    const json& a = doc.at("architecture");
    w.arch.input_height = a.at("input_height").get<int>();
    w.arch.input_width = a.at("input_width").get<int>();
    w.arch.input_channels = a.at("input_channels").get<int>();
    w.arch.num_classes = a.at("num_classes").get<int>();
    const std::string act = a.at("activation").get<std::string>();
    if (act == "silu") {
      w.arch.activation = Activation::kSiLU;
    } else if (act == "identity") {
      w.arch.activation = Activation::kIdentity;
    } else {
      throw DataError(origin + ": unknown activation '" + act + "'");
    }
    for (const auto& c : a.at("backbone")) {
      w.arch.backbone.push_back(
          {c.at("out_channels").get<int>(), c.at("kernel").get<int>(), c.at("stride").get<int>()});
    }
    w.arch.validate();
    int in = w.arch.input_channels;
    const auto& layers = doc.at("layers");
    if (layers.size() != w.arch.backbone.size() + 1) {
      throw DataError(origin + ": layer count does not match architecture");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const json& l = layers[i];
      ConvLayer<double> layer;
      layer.in_channels = l.at("in_channels").get<int>();
      layer.out_channels = l.at("out_channels").get<int>();
      layer.kernel = l.at("kernel").get<int>();
      layer.stride = l.at("stride").get<int>();
      const bool head = (i == w.arch.backbone.size());
      const ConvSpec expect = head ? ConvSpec{w.arch.head_channels(), 1, 1} : w.arch.backbone[i];
      if (layer.in_channels != in || layer.out_channels != expect.out_channels || layer.kernel != expect.kernel ||
          layer.stride != expect.stride) {
        throw DataError(origin + ": layer " + std::to_string(i) + " shape does not match architecture");
      }
      const auto wv = l.at("weight").get<std::vector<double>>();
      const auto bv = l.at("bias").get<std::vector<double>>();
      const int cols = layer.kernel * layer.kernel * layer.in_channels;
      if (wv.size() != static_cast<std::size_t>(layer.out_channels) * static_cast<std::size_t>(cols) ||
          bv.size() != static_cast<std::size_t>(layer.out_channels)) {
        throw DataError(origin + ": layer " + std::to_string(i) + " has the wrong number of parameters");
      }
      layer.weight.resize(layer.out_channels, cols);
      for (int r = 0; r < layer.out_channels; ++r) {
        for (int c = 0; c < cols; ++c) layer.weight(r, c) = wv[static_cast<std::size_t>(r) * cols + c];
      }
      layer.bias = Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));
      w.layers.push_back(std::move(layer));
      in = expect.out_channels;
    }
  } catch (const json::exception& e) {
    throw DataError(origin + ": malformed checkpoint: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(origin + ": " + e.what());
  }
  return w;
}

void save_weights(const DetectorWeights<double>& weights, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_weights(weights));
}

DetectorWeights<double> load_weights(const std::filesystem::path& path) {
  return deserialize_weights(io::read_file(path), path.string());
}

std::string weights_digest(const DetectorWeights<double>& weights) {
  return io::fnv1a_hex(serialize_weights(weights));
}

// ---------------------------------------------------------------------------

#define UDOS_INSTANTIATE_DETECTOR(Scalar)                                                                        \
  template DetectorWeights<Scalar> init_weights<Scalar>(const Architecture&, std::uint64_t);                    \
  template ForwardPass<Scalar> forward_pass<Scalar>(const DetectorWeights<Scalar>&, const ImageTensor<Scalar>&); \
  template RawPredictions<Scalar> forward<Scalar>(const DetectorWeights<Scalar>&, const ImageTensor<Scalar>&);   \
  template struct WeightGradients<Scalar>;                                                                      \
  template ImageTensor<Scalar> backward<Scalar>(const DetectorWeights<Scalar>&, const ForwardPass<Scalar>&,      \
                                                const typename RawPredictions<Scalar>::Matrix&,                 \
                                                WeightGradients<Scalar>*);                                      \
  template LossGradient<Scalar> input_gradient<Scalar>(const DetectorWeights<Scalar>&,                          \
                                                       const ImageTensor<Scalar>&, const HeadLoss<Scalar>&);    \
  template DetectionSet decode_proposals<Scalar>(const Architecture&, const RawPredictions<Scalar>&);           \
  template DetectionSet detect<Scalar>(const DetectorWeights<Scalar>&, const ImageTensor<Scalar>&, double);      \
  template Scalar training_loss<Scalar>(const Architecture&, const RawPredictions<Scalar>&,                     \
                                        const std::vector<GroundTruthObject>&, double, double, double,          \
                                        typename RawPredictions<Scalar>::Matrix&);                              \
  template DetectorWeights<Scalar> train<Scalar>(const Dataset&, const Architecture&, const TrainOptions&);

UDOS_INSTANTIATE_DETECTOR(double)
UDOS_INSTANTIATE_DETECTOR(float)

#undef UDOS_INSTANTIATE_DETECTOR

}  // namespace udos
