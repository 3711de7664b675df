// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tvmerge/checkpoint.hpp"
#include "tvmerge/metrics.hpp"
#include "tvmerge/toybench/language.hpp"

namespace tvmerge::toybench {

/// Weights of the per-frame classifier
///   hidden = tanh(x W1 + b1),  logits = hidden W2 + b2.
template <typename Scalar>
struct MlpWeights {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Matrix w1;      // feature_dim x hidden
  RowVector b1;   // hidden
  Matrix w2;      // hidden x classes
  RowVector b2;   // classes

  static MlpWeights zeros_like(const MlpWeights& other) {
    return {Matrix::Zero(other.w1.rows(), other.w1.cols()), RowVector::Zero(other.b1.size()),
            Matrix::Zero(other.w2.rows(), other.w2.cols()), RowVector::Zero(other.b2.size())};
  }
};

template <typename Scalar>
using FrameMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Row-wise class probabilities.
template <typename Scalar>
FrameMatrix<Scalar> softmax_rows(const FrameMatrix<Scalar>& logits) {
  FrameMatrix<Scalar> p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

template <typename Scalar>
FrameMatrix<Scalar> hidden_activations(const MlpWeights<Scalar>& w, const FrameMatrix<Scalar>& x) {
  return ((x * w.w1).rowwise() + w.b1).array().tanh().matrix();
}

template <typename Scalar>
FrameMatrix<Scalar> logits(const MlpWeights<Scalar>& w, const FrameMatrix<Scalar>& x) {
  return (hidden_activations(w, x) * w.w2).rowwise() + w.b2;
}

/// Mean per-frame cross-entropy; fills `grad` with its gradient when non-null.
template <typename Scalar>
Scalar cross_entropy(const MlpWeights<Scalar>& w, const FrameMatrix<Scalar>& x, const std::vector<int>& labels,
                     MlpWeights<Scalar>* grad = nullptr) {
  const auto n = x.rows();
  const FrameMatrix<Scalar> h = hidden_activations(w, x);
  const FrameMatrix<Scalar> z = (h * w.w2).rowwise() + w.b2;
  const auto zmax = z.rowwise().maxCoeff();
  const FrameMatrix<Scalar> shifted = z.colwise() - zmax;
  const auto log_norm = shifted.array().exp().rowwise().sum().log();
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) loss += log_norm(i) - shifted(i, labels[static_cast<std::size_t>(i)]);
  loss /= static_cast<Scalar>(n);
  if (grad) {
    FrameMatrix<Scalar> dz = (shifted.array().colwise() - log_norm).exp().matrix();
    for (Eigen::Index i = 0; i < n; ++i) dz(i, labels[static_cast<std::size_t>(i)]) -= Scalar(1);
    dz /= static_cast<Scalar>(n);
    grad->w2 = h.transpose() * dz;
    grad->b2 = dz.colwise().sum();
    const FrameMatrix<Scalar> da = ((dz * w.w2.transpose()).array() * (Scalar(1) - h.array().square())).matrix();
    grad->w1 = x.transpose() * da;
    grad->b1 = da.colwise().sum();
  }
  return loss;
}

/// All frames of a dataset stacked into one matrix.
struct FrameSet {
  FrameMatrix<double> features;
  std::vector<int> labels;
  std::vector<std::string> references;
  std::size_t seq_len = 0;
};

FrameSet stack_frames(const Dataset& data);

/// Tensor names inside a recognizer checkpoint.
inline constexpr const char* kW1 = "W1";
inline constexpr const char* kB1 = "b1";
inline constexpr const char* kW2 = "W2";
inline constexpr const char* kB2 = "b2";

/// A recognizer is a checkpoint with tensors W1 [d,h], b1 [h], W2 [h,c], b2 [c].
class ToyRecognizer {
 public:
  explicit ToyRecognizer(ParameterSet params);

  /// Small random weights (scaled by 1/sqrt(fan_in)) and zero biases.
  static ToyRecognizer initialize(int feature_dim, int hidden, int classes, std::uint64_t seed);
  static ToyRecognizer from_weights(const MlpWeights<double>& w, ParameterSet::Metadata metadata = {});

  const ParameterSet& params() const noexcept { return params_; }
  MlpWeights<double> weights() const;

  int feature_dim() const;
  int hidden() const;
  int classes() const;

  /// Greedy per-frame argmax, rendered as one string per sequence.
  std::vector<std::string> transcribe(const FrameSet& frames) const;

 private:
  ParameterSet params_;
};

struct TrainOptions {
  int epochs = 10;
  double lr = 0.1;
  std::size_t batch_size = 256;
  bool freeze_first_layer = false;
};

struct TrainOutcome {
  ToyRecognizer model;
  /// Full-data loss before training, then after every epoch.
  std::vector<double> loss_trace;
};

/// Mini-batch gradient descent on per-frame cross-entropy. Batches are
/// reshuffled each epoch from `seed`. Throws DivergedLoss on a non-finite loss.
TrainOutcome train(const ToyRecognizer& model, const FrameSet& data, const TrainOptions& options,
                   std::uint64_t seed);
TrainOutcome train(const ToyRecognizer& model, const Dataset& data, int epochs, double lr, std::uint64_t seed);

/// As train, with W1 and b1 frozen.
TrainOutcome linear_probe(const ToyRecognizer& model, const FrameSet& data, TrainOptions options,
                          std::uint64_t seed);
TrainOutcome linear_probe(const ToyRecognizer& model, const Dataset& data, int epochs, double lr,
                          std::uint64_t seed);

EvalReport evaluate_recognizer(const ToyRecognizer& model, const FrameSet& data, std::string dataset,
                               std::string model_name);

}  // namespace tvmerge::toybench
