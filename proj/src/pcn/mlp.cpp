#include "epi/pcn/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace epi::pcn {

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

void Gradients::scale(double factor) {
  for (auto& w : weights) w *= factor;
  for (auto& b : biases) b *= factor;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

Mlp::Mlp(int input_size, std::vector<int> hidden, std::uint64_t seed) {
  if (input_size < 1) throw std::invalid_argument("input size must be >= 1");
  dims_.push_back(input_size);
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden widths must be >= 1");
    dims_.push_back(h);
  }
  dims_.push_back(kOutputs);

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const int in = dims_[l], out = dims_[l + 1];
    const double bound = std::sqrt(6.0 / in);
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(out));
  }
}

Logits Mlp::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size())
    throw std::invalid_argument("mlp input has " + std::to_string(input.size()) + " values, expected " +
                                std::to_string(input_size()));
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    a = (l + 1 < weights_.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  Logits out;
  for (int k = 0; k < kHeads; ++k)
    for (int j = 0; j < kActionsPerHead; ++j) out(k, j) = a(k * kActionsPerHead + j);
  return out;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_size()) throw std::invalid_argument("mlp batch has wrong input width");
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
    a = (l + 1 < weights_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

namespace {

// Per-head softmax cross-entropy on a kOutputs x batch logit matrix. Writes
// d(loss)/d(logits) into `dlogits` when non-null.
double cross_entropy(const Eigen::MatrixXd& logits, std::span<const InterventionLevels> labels,
                     Eigen::MatrixXd* dlogits) {
  const Eigen::Index batch = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch) throw std::invalid_argument("label count mismatch");
  if (dlogits) dlogits->resize(logits.rows(), batch);
  double total = 0.0;
  for (Eigen::Index n = 0; n < batch; ++n) {
    const auto& label = labels[static_cast<std::size_t>(n)];
    for (int k = 0; k < kHeads; ++k) {
      const int target = label[k];
      if (target < 0 || target > kMaxLevel) throw std::invalid_argument("label level out of range");
      const auto head = logits.block(k * kActionsPerHead, n, kActionsPerHead, 1);
      const double m = head.maxCoeff();
      const Eigen::VectorXd e = (head.array() - m).exp();
      const double z = e.sum();
      total += m + std::log(z) - head(target, 0);
      if (dlogits) {
        auto d = dlogits->block(k * kActionsPerHead, n, kActionsPerHead, 1);
        d = e / z;
        d(target, 0) -= 1.0;
      }
    }
  }
  return total;
}

}  // namespace

double Mlp::loss(const Eigen::MatrixXd& inputs, std::span<const InterventionLevels> labels) const {
  return cross_entropy(forward_batch(inputs), labels, nullptr);
}

double Mlp::loss_and_gradients(const Eigen::MatrixXd& inputs, std::span<const InterventionLevels> labels,
                               Gradients& grads) const {
  if (inputs.rows() != input_size()) throw std::invalid_argument("mlp batch has wrong input width");
  const std::size_t layers = weights_.size();
  std::vector<Eigen::MatrixXd> acts;  // acts[l] = input to layer l
  std::vector<Eigen::MatrixXd> pre;   // pre-activations of hidden layers
  acts.reserve(layers + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (weights_[l] * acts.back()).colwise() + biases_[l];
    if (l + 1 < layers) {
      pre.push_back(z);
      acts.push_back(z.cwiseMax(0.0));
    } else {
      acts.push_back(std::move(z));
    }
  }

  Eigen::MatrixXd delta;
  const double total = cross_entropy(acts.back(), labels, &delta);

  grads = zero_gradients();
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l] = delta * acts[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = weights_[l].transpose() * delta;
      delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return total;
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

void Mlp::apply(const Gradients& delta) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] += delta.weights[l];
    biases_[l] += delta.biases[l];
  }
}

bool Mlp::finite() const {
  for (const auto& w : weights_)
    if (!w.allFinite()) return false;
  for (const auto& b : biases_)
    if (!b.allFinite()) return false;
  return true;
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    std::vector<double> flat(static_cast<std::size_t>(w.size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), w.rows(),
                                                                                        w.cols()) = w;
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", flat},
                      {"bias", std::vector<double>(biases_[l].data(), biases_[l].data() + biases_[l].size())}});
  }
  return {{"dims", dims_}, {"activation", "relu"}, {"layers", layers}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  net.dims_ = j.at("dims").get<std::vector<int>>();
  const auto& layers = j.at("layers");
  if (net.dims_.size() != layers.size() + 1) throw std::invalid_argument("checkpoint layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto rows = layer.at("rows").get<Eigen::Index>();
    const auto cols = layer.at("cols").get<Eigen::Index>();
    if (rows != net.dims_[l + 1] || cols != net.dims_[l]) throw std::invalid_argument("checkpoint shape mismatch");
    const auto flat = layer.at("weights").get<std::vector<double>>();
    const auto bias = layer.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols || static_cast<Eigen::Index>(bias.size()) != rows)
      throw std::invalid_argument("checkpoint parameter count mismatch");
    net.weights_.push_back(
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), rows,
                                                                                                 cols));
    net.biases_.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
  }
  if (net.dims_.back() != kOutputs) throw std::invalid_argument("checkpoint output width must be 33");
  return net;
}

Logits head_probabilities(const Logits& logits) {
  Logits p;
  for (int k = 0; k < kHeads; ++k) {
    const double m = logits.row(k).maxCoeff();
    const auto e = (logits.row(k).array() - m).exp();
    p.row(k) = e / e.sum();
  }
  return p;
}

void SgdMomentum::step(Mlp& net, Gradients grads) {
  const double norm = std::sqrt(grads.squared_norm());
  if (clip_ > 0.0 && norm > clip_) grads.scale(clip_ / norm);
  if (!initialized_) {
    velocity_ = net.zero_gradients();
    initialized_ = true;
  }
  for (std::size_t l = 0; l < velocity_.weights.size(); ++l) {
    velocity_.weights[l] = momentum_ * velocity_.weights[l] - lr_ * grads.weights[l];
    velocity_.biases[l] = momentum_ * velocity_.biases[l] - lr_ * grads.biases[l];
  }
  net.apply(velocity_);
}

}  // namespace epi::pcn
