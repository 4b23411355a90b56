#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "epi/core/model.hpp"
#include "epi/core/rng.hpp"

namespace epi::pcn {

inline constexpr int kHeads = kNumChannels;
inline constexpr int kActionsPerHead = kLevelsPerChannel;
inline constexpr int kOutputs = kHeads * kActionsPerHead;

/// Logits laid out as (head, level): row k holds the 11 logits of channel k.
using Logits = Eigen::Matrix<double, kHeads, kActionsPerHead, Eigen::RowMajor>;

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  double squared_norm() const;
  void scale(double factor);
  Gradients& operator+=(const Gradients& other);
};

/// Fully connected network with ReLU hidden layers and a linear output of
/// 3 heads x 11 logits.
class Mlp {
 public:
  Mlp() = default;
  /// `hidden` lists hidden layer widths. Weights are He-uniform from `seed`.
  Mlp(int input_size, std::vector<int> hidden, std::uint64_t seed);

  int input_size() const noexcept { return dims_.front(); }
  const std::vector<int>& dims() const noexcept { return dims_; }
  std::size_t num_layers() const noexcept { return weights_.size(); }

  /// Throws std::invalid_argument when the input width is wrong.
  Logits forward(std::span<const double> input) const;
  /// Columns are samples; returns kOutputs x batch logits.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  /// Sum over the batch of the per-head cross-entropies, and its exact
  /// gradient. `labels` holds one action per sample (each level in 0..10).
  double loss_and_gradients(const Eigen::MatrixXd& inputs, std::span<const InterventionLevels> labels,
                            Gradients& grads) const;
  double loss(const Eigen::MatrixXd& inputs, std::span<const InterventionLevels> labels) const;

  Gradients zero_gradients() const;
  void apply(const Gradients& delta);  ///< parameters += delta

  std::vector<Eigen::MatrixXd>& weights() noexcept { return weights_; }
  std::vector<Eigen::VectorXd>& biases() noexcept { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const noexcept { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const noexcept { return biases_; }

  bool finite() const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::vector<int> dims_;
  std::vector<Eigen::MatrixXd> weights_;  // (out x in)
  std::vector<Eigen::VectorXd> biases_;
};

/// Softmax of each head's logits.
Logits head_probabilities(const Logits& logits);

/// SGD with momentum and global gradient-norm clipping.
class SgdMomentum {
 public:
  SgdMomentum(double learning_rate, double momentum, double clip_norm)
      : lr_(learning_rate), momentum_(momentum), clip_(clip_norm) {}

  /// `grads` are the mean-reduced gradients of the loss.
  void step(Mlp& net, Gradients grads);

 private:
  double lr_, momentum_, clip_;
  Gradients velocity_;
  bool initialized_ = false;
};

}  // namespace epi::pcn
