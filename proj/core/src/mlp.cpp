#include "empcnet/mlp.hpp"

#include <cmath>

namespace empcnet {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2 || sizes_.back() != 1) {
    throw ConfigError("MLP needs at least input and scalar output layers");
  }
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw ConfigError("MLP layer sizes must be positive");
    weight_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
    bias_offset_.push_back(offset);
    offset += sizes_[l + 1];
  }
  theta_ = Vec::Zero(offset);
}

Mlp Mlp::random(std::vector<int> layer_sizes, std::mt19937_64& rng) {
  Mlp net(std::move(layer_sizes));
  for (int l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Eigen::Index begin = net.weight_offset_[l];
    const Eigen::Index end = net.bias_offset_[l] + net.sizes_[l + 1];
    for (Eigen::Index i = begin; i < end; ++i) net.theta_(i) = dist(rng);
  }
  return net;
}

Eigen::Map<const Mat> Mlp::weight(int layer) const {
  return {theta_.data() + weight_offset_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Vec> Mlp::bias(int layer) const {
  return {theta_.data() + bias_offset_[layer], sizes_[layer + 1]};
}

Vec Mlp::forward(const Mat& inputs) const {
  Mat a = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Mat z = weight(l) * a;
    z.colwise() += bias(l);
    a = (l + 1 < num_layers()) ? Mat(z.array().tanh()) : z;
  }
  return a.row(0).transpose();
}

double Mlp::forward(const Vec& input) const {
  return forward(Mat(input))(0);
}

Mlp::Tape Mlp::record(const Mat& inputs) const {
  const int L = num_layers();
  Tape tape;
  tape.activations.reserve(static_cast<std::size_t>(L) + 1);
  tape.activations.push_back(inputs);
  for (int l = 0; l < L; ++l) {
    Mat z = weight(l) * tape.activations.back();
    z.colwise() += bias(l);
    if (l + 1 < L) z = z.array().tanh();
    tape.activations.push_back(std::move(z));
  }
  return tape;
}

Mlp::Gradients Mlp::backward(const Mat& inputs, const Vec& output_grad) const {
  return backward(record(inputs), output_grad);
}

Mlp::Gradients Mlp::backward(const Tape& tape, const Vec& output_grad) const {
  const int L = num_layers();
  const auto& acts = tape.activations;
  Gradients grads;
  grads.parameters = Vec::Zero(theta_.size());
  Mat delta = output_grad.transpose();  // 1 x B, dL/dz at the output
  for (int l = L - 1; l >= 0; --l) {
    const Mat& a_prev = acts[static_cast<std::size_t>(l)];
    Eigen::Map<Mat>(grads.parameters.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]) =
        delta * a_prev.transpose();
    Eigen::Map<Vec>(grads.parameters.data() + bias_offset_[l], sizes_[l + 1]) =
        delta.rowwise().sum();
    Mat back = weight(l).transpose() * delta;
    if (l > 0) {
      back.array() *= 1.0 - a_prev.array().square();  // tanh'
    }
    delta = std::move(back);
  }
  grads.inputs = std::move(delta);
  return grads;
}

}  // namespace empcnet
