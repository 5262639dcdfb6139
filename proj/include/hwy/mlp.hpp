#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hwy {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Per-layer gradients, shaped like the network's layers.
using MlpGradients = std::vector<DenseLayer>;

/// Fully connected Q-network: tanh on every hidden layer, linear output head.
class Mlp {
 public:
  Mlp() = default;

  /// widths = {input, hidden..., output}. Weights are drawn uniformly in
  /// +-1/sqrt(fan_in), biases start at zero.
  Mlp(std::vector<int> widths, std::uint64_t seed);

  const std::vector<int>& widths() const { return widths_; }
  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Eigen::VectorXd forward(std::span<const double> input) const;

  /// Batched forward pass; each column of inputs is one sample.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

  /// Mean squared error between Q(s_i, a_i) and targets_i over the batch and
  /// its gradient with respect to every parameter.
  double td_loss(const Eigen::MatrixXd& inputs, std::span<const int> actions,
                 std::span<const double> targets,
                 MlpGradients* gradients = nullptr) const;

  bool all_finite() const;

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);
  void save_file(const std::string& path) const;
  static Mlp load_file(const std::string& path);

 private:
  std::vector<int> widths_;
  std::vector<DenseLayer> layers_;
};

/// Adam with bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const Mlp& net, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  void apply(Mlp& net, const MlpGradients& grads);
  long steps() const { return t_; }

 private:
  double lr_ = 1e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
};

}  // namespace hwy
