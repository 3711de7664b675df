// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/toybench/recognizer.hpp"

#include <numeric>

#include "tvmerge/error.hpp"
#include "tvmerge/toybench/random.hpp"

namespace tvmerge::toybench {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor matrix_tensor(const Eigen::MatrixXd& m) {
  const RowMajor rm = m;
  Tensor::Vector flat = Eigen::Map<const Tensor::Vector>(rm.data(), rm.size());
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(flat));
}

Tensor vector_tensor(const Eigen::RowVectorXd& v) {
  return Tensor({static_cast<std::size_t>(v.size())}, v.transpose());
}

Eigen::MatrixXd tensor_matrix(const Tensor& t) {
  return Eigen::Map<const RowMajor>(t.data.data(), static_cast<Eigen::Index>(t.shape[0]),
                                    static_cast<Eigen::Index>(t.shape[1]));
}

void check_finite(double loss, int epoch) {
  if (!std::isfinite(loss))
    throw Error(Errc::DivergedLoss, "non-finite training loss at epoch " + std::to_string(epoch));
}

}  // namespace

FrameSet stack_frames(const Dataset& data) {
  FrameSet fs;
  if (data.empty()) return fs;
  fs.seq_len = static_cast<std::size_t>(data.front().features.rows());
  const auto dim = data.front().features.cols();
  fs.features.resize(static_cast<Eigen::Index>(data.size() * fs.seq_len), dim);
  Eigen::Index row = 0;
  for (const auto& s : data) {
    if (static_cast<std::size_t>(s.features.rows()) != fs.seq_len || s.features.cols() != dim)
      throw Error(Errc::InvalidArgument, "dataset mixes sequence lengths or feature sizes");
    fs.features.middleRows(row, s.features.rows()) = s.features;
    row += s.features.rows();
    fs.labels.insert(fs.labels.end(), s.labels.begin(), s.labels.end());
    fs.references.push_back(s.text);
  }
  return fs;
}

ToyRecognizer::ToyRecognizer(ParameterSet params) : params_(std::move(params)) {
  for (const char* name : {kW1, kB1, kW2, kB2})
    if (!params_.contains(name)) throw Error(Errc::KeySetMismatch, std::string("recognizer lacks tensor '") + name + "'");
  const auto& w1 = params_.at(kW1).shape;
  const auto& b1 = params_.at(kB1).shape;
  const auto& w2 = params_.at(kW2).shape;
  const auto& b2 = params_.at(kB2).shape;
  if (w1.size() != 2 || b1.size() != 1 || w2.size() != 2 || b2.size() != 1 || b1[0] != w1[1] || w2[0] != w1[1] ||
      b2[0] != w2[1])
    throw Error(Errc::ShapeMismatch, "recognizer tensor shapes are inconsistent");
}

ToyRecognizer ToyRecognizer::initialize(int feature_dim, int hidden, int classes, std::uint64_t seed) {
  Rng rng(seed);
  MlpWeights<double> w;
  w.w1.resize(feature_dim, hidden);
  w.w2.resize(hidden, classes);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < w.w1.rows(); ++i)
    for (Eigen::Index j = 0; j < w.w1.cols(); ++j) w.w1(i, j) = s1 * rng.normal();
  for (Eigen::Index i = 0; i < w.w2.rows(); ++i)
    for (Eigen::Index j = 0; j < w.w2.cols(); ++j) w.w2(i, j) = s2 * rng.normal();
  w.b1 = Eigen::RowVectorXd::Zero(hidden);
  w.b2 = Eigen::RowVectorXd::Zero(classes);
  return from_weights(w, {{"role", "init"}});
}

ToyRecognizer ToyRecognizer::from_weights(const MlpWeights<double>& w, ParameterSet::Metadata metadata) {
  ParameterSet p(Dtype::f64);
  p.set(kW1, matrix_tensor(w.w1));
  p.set(kB1, vector_tensor(w.b1));
  p.set(kW2, matrix_tensor(w.w2));
  p.set(kB2, vector_tensor(w.b2));
  p.metadata() = std::move(metadata);
  return ToyRecognizer(std::move(p));
}

MlpWeights<double> ToyRecognizer::weights() const {
  MlpWeights<double> w;
  w.w1 = tensor_matrix(params_.at(kW1));
  w.b1 = params_.at(kB1).data.transpose();
  w.w2 = tensor_matrix(params_.at(kW2));
  w.b2 = params_.at(kB2).data.transpose();
  return w;
}

int ToyRecognizer::feature_dim() const { return static_cast<int>(params_.at(kW1).shape[0]); }
int ToyRecognizer::hidden() const { return static_cast<int>(params_.at(kW1).shape[1]); }
int ToyRecognizer::classes() const { return static_cast<int>(params_.at(kW2).shape[1]); }

std::vector<std::string> ToyRecognizer::transcribe(const FrameSet& frames) const {
  const auto w = weights();
  const FrameMatrix<double> z = logits(w, frames.features);
  std::vector<std::string> out;
  out.reserve(frames.references.size());
  for (Eigen::Index start = 0; start < z.rows(); start += static_cast<Eigen::Index>(frames.seq_len)) {
    std::string line;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(frames.seq_len); ++t) {
      Eigen::Index best;
      z.row(start + t).maxCoeff(&best);
      line.push_back(symbol_char(static_cast<int>(best)));
    }
    out.push_back(std::move(line));
  }
  return out;
}

TrainOutcome train(const ToyRecognizer& model, const FrameSet& data, const TrainOptions& options,
                   std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.features.rows());
  if (n == 0) throw Error(Errc::InvalidArgument, "training data is empty");
  if (options.batch_size == 0) throw Error(Errc::InvalidArgument, "batch size must be >= 1");
  if (options.epochs < 0) throw Error(Errc::InvalidArgument, "epochs must be >= 0");

  MlpWeights<double> w = model.weights();
  TrainOutcome out{model, {}};
  out.loss_trace.push_back(cross_entropy(w, data.features, data.labels));
  check_finite(out.loss_trace.back(), 0);
  if (options.lr == 0.0) {
    for (int e = 0; e < options.epochs; ++e) out.loss_trace.push_back(out.loss_trace.front());
    return out;
  }

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  MlpWeights<double> grad = MlpWeights<double>::zeros_like(w);
  FrameMatrix<double> xb;
  std::vector<int> yb;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t len = std::min(options.batch_size, n - start);
      xb.resize(static_cast<Eigen::Index>(len), data.features.cols());
      yb.resize(len);
      for (std::size_t k = 0; k < len; ++k) {
        xb.row(static_cast<Eigen::Index>(k)) = data.features.row(static_cast<Eigen::Index>(order[start + k]));
        yb[k] = data.labels[order[start + k]];
      }
      check_finite(cross_entropy(w, xb, yb, &grad), epoch);
      if (!options.freeze_first_layer) {
        w.w1 -= options.lr * grad.w1;
        w.b1 -= options.lr * grad.b1;
      }
      w.w2 -= options.lr * grad.w2;
      w.b2 -= options.lr * grad.b2;
    }
    out.loss_trace.push_back(cross_entropy(w, data.features, data.labels));
    check_finite(out.loss_trace.back(), epoch);
  }

  if (options.freeze_first_layer) {
    // Copy the frozen tensors from the input so they stay bit-identical.
    ParameterSet p = model.params();
    const auto updated = ToyRecognizer::from_weights(w).params();
    p.set(kW2, updated.at(kW2));
    p.set(kB2, updated.at(kB2));
    out.model = ToyRecognizer(std::move(p));
  } else {
    out.model = ToyRecognizer::from_weights(w, model.params().metadata());
  }
  return out;
}

TrainOutcome train(const ToyRecognizer& model, const Dataset& data, int epochs, double lr, std::uint64_t seed) {
  if (data.empty()) throw Error(Errc::InvalidArgument, "training data is empty");
  TrainOptions opt;
  opt.epochs = epochs;
  opt.lr = lr;
  return train(model, stack_frames(data), opt, seed);
}

TrainOutcome linear_probe(const ToyRecognizer& model, const FrameSet& data, TrainOptions options,
                          std::uint64_t seed) {
  options.freeze_first_layer = true;
  return train(model, data, options, seed);
}

TrainOutcome linear_probe(const ToyRecognizer& model, const Dataset& data, int epochs, double lr,
                          std::uint64_t seed) {
  if (data.empty()) throw Error(Errc::InvalidArgument, "training data is empty");
  TrainOptions opt;
  opt.epochs = epochs;
  opt.lr = lr;
  return linear_probe(model, stack_frames(data), opt, seed);
}

EvalReport evaluate_recognizer(const ToyRecognizer& model, const FrameSet& data, std::string dataset,
                               std::string model_name) {
  return evaluate(model.transcribe(data), data.references, std::move(dataset), std::move(model_name));
}

}  // namespace tvmerge::toybench
