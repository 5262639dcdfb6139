#include "hwy/mlp.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hwy {

namespace {

constexpr const char* kMagic = "hwysim-qnet";
constexpr int kFormatVersion = 1;

void expect_token(std::istream& in, const std::string& want) {
  std::string got;
  if (!(in >> got) || got != want) {
    throw std::runtime_error("checkpoint: expected '" + want + "', got '" +
                             got + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) {
    throw std::runtime_error(std::string("checkpoint: could not read ") + what);
  }
  return value;
}

}  // namespace

Mlp::Mlp(std::vector<int> widths, std::uint64_t seed)
    : widths_(std::move(widths)) {
  if (widths_.size() < 2) {
    throw std::invalid_argument("Mlp needs at least input and output widths");
  }
  for (int w : widths_) {
    if (w <= 0) throw std::invalid_argument("Mlp widths must be positive");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weights(r, c) = dist(rng);
    }
    layers_.push_back(std::move(layer));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

Eigen::VectorXd Mlp::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size()) {
    throw std::invalid_argument("Mlp::forward: input has " +
                                std::to_string(input.size()) +
                                " entries, expected " +
                                std::to_string(input_size()));
  }
  Eigen::VectorXd a =
      Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * a + layers_[l].bias;
    a = l + 1 < layers_.size() ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_size()) {
    throw std::invalid_argument("Mlp::forward: batch row count mismatch");
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.array().tanh()) : z;
  }
  return a;
}

double Mlp::td_loss(const Eigen::MatrixXd& inputs, std::span<const int> actions,
                    std::span<const double> targets,
                    MlpGradients* gradients) const {
  const Eigen::Index batch = inputs.cols();
  if (batch == 0 || static_cast<Eigen::Index>(actions.size()) != batch ||
      static_cast<Eigen::Index>(targets.size()) != batch) {
    throw std::invalid_argument("td_loss: batch size mismatch");
  }
  if (inputs.rows() != input_size()) {
    throw std::invalid_argument("td_loss: input width mismatch");
  }

  // activations[0] is the input, activations[l + 1] the output of layer l.
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(layers_.size() + 1);
  activations.push_back(inputs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * activations.back();
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) z = z.array().tanh();
    activations.push_back(std::move(z));
  }

  const Eigen::MatrixXd& q = activations.back();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int a = actions[i];
    if (a < 0 || a >= q.rows()) throw std::out_of_range("td_loss: action");
    const double err = q(a, i) - targets[i];
    loss += err * err;
    delta(a, i) = 2.0 * err / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);
  if (!gradients) return loss;

  gradients->resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    DenseLayer& g = (*gradients)[l];
    g.weights.noalias() = delta * activations[l].transpose();
    g.bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers_[l].weights.transpose() * delta;
      delta = back.array() * (1.0 - activations[l].array().square());
    }
  }
  return loss;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "activation tanh\n";
  out << "widths " << widths_.size();
  for (int w : widths_) out << ' ' << w;
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    out << "weights " << layer.weights.rows() << ' ' << layer.weights.cols()
        << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        out << (c ? " " : "") << layer.weights(r, c);
      }
      out << '\n';
    }
    out << "bias " << layer.bias.size() << '\n';
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      out << (r ? " " : "") << layer.bias(r);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Mlp Mlp::load(std::istream& in) {
  expect_token(in, kMagic);
  const int version = read_value<int>(in, "version");
  if (version != kFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  expect_token(in, "activation");
  expect_token(in, "tanh");
  expect_token(in, "widths");
  const auto count = read_value<std::size_t>(in, "width count");
  if (count < 2 || count > 64) {
    throw std::runtime_error("checkpoint: bad width count");
  }
  Mlp net;
  for (std::size_t i = 0; i < count; ++i) {
    const int w = read_value<int>(in, "width");
    if (w <= 0) throw std::runtime_error("checkpoint: non-positive width");
    net.widths_.push_back(w);
  }
  for (std::size_t l = 0; l + 1 < count; ++l) {
    expect_token(in, "weights");
    const auto rows = read_value<Eigen::Index>(in, "rows");
    const auto cols = read_value<Eigen::Index>(in, "cols");
    if (rows != net.widths_[l + 1] || cols != net.widths_[l]) {
      throw std::runtime_error("checkpoint: layer shape does not match widths");
    }
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.weights(r, c) = read_value<double>(in, "weight");
      }
    }
    expect_token(in, "bias");
    if (read_value<Eigen::Index>(in, "bias size") != rows) {
      throw std::runtime_error("checkpoint: bias size mismatch");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      layer.bias(r) = read_value<double>(in, "bias");
    }
    net.layers_.push_back(std::move(layer));
  }
  if (!net.all_finite()) throw std::runtime_error("checkpoint: non-finite value");
  return net;
}

void Mlp::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save(out);
}

Mlp Mlp::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return load(in);
}

AdamOptimizer::AdamOptimizer(const Mlp& net, double learning_rate, double beta1,
                             double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const auto& l : net.layers()) {
    DenseLayer zero{Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                    Eigen::VectorXd::Zero(l.bias.size())};
    m_.push_back(zero);
    v_.push_back(std::move(zero));
  }
}

void AdamOptimizer::apply(Mlp& net, const MlpGradients& grads) {
  auto& layers = net.layers();
  if (grads.size() != layers.size() || m_.size() != layers.size()) {
    throw std::invalid_argument("AdamOptimizer: layer count mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  const double eps_hat = eps_ * std::sqrt(c2);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    m_[l].weights = beta1_ * m_[l].weights + (1.0 - beta1_) * grads[l].weights;
    v_[l].weights = beta2_ * v_[l].weights +
                    (1.0 - beta2_) * grads[l].weights.array().square().matrix();
    layers[l].weights.array() -=
        step * m_[l].weights.array() / (v_[l].weights.array().sqrt() + eps_hat);

    m_[l].bias = beta1_ * m_[l].bias + (1.0 - beta1_) * grads[l].bias;
    v_[l].bias = beta2_ * v_[l].bias +
                 (1.0 - beta2_) * grads[l].bias.array().square().matrix();
    layers[l].bias.array() -=
        step * m_[l].bias.array() / (v_[l].bias.array().sqrt() + eps_hat);
  }
}

}  // namespace hwy
