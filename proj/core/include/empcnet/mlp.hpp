#pragma once

#include <random>
#include <vector>

#include "empcnet/common.hpp"

namespace empcnet {

// Fully connected network with tanh hidden layers and a linear scalar output.
// All weights and biases live in one flat parameter vector (column-major
// weight blocks followed by the bias of each layer), which keeps target
// averaging, optimizers and finite-difference probes simple.
class Mlp {
 public:
  Mlp() = default;
  // layer_sizes = {inputs, hidden..., 1}; parameters start at zero.
  explicit Mlp(std::vector<int> layer_sizes);

  // Uniform weights and biases in +-1/sqrt(fan_in) per layer.
  static Mlp random(std::vector<int> layer_sizes, std::mt19937_64& rng);

  int input_dim() const { return sizes_.front(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Eigen::Index num_parameters() const { return theta_.size(); }

  Vec& parameters() { return theta_; }
  const Vec& parameters() const { return theta_; }

  // inputs: one column per sample. Returns one output per sample.
  Vec forward(const Mat& inputs) const;
  double forward(const Vec& input) const;

  struct Gradients {
    Vec parameters;  // dL/dtheta
    Mat inputs;      // dL/dinput, one column per sample
  };
  // Backpropagates upstream gradients dL/dout (one per sample).
  Gradients backward(const Mat& inputs, const Vec& output_grad) const;

  // Layer activations of one forward pass, reusable for backpropagation.
  struct Tape {
    std::vector<Mat> activations;  // inputs, hidden..., output
    Vec output() const { return activations.back().row(0).transpose(); }
  };
  Tape record(const Mat& inputs) const;
  Gradients backward(const Tape& tape, const Vec& output_grad) const;

 private:
  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<const Vec> bias(int layer) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> weight_offset_;
  std::vector<Eigen::Index> bias_offset_;
  Vec theta_;
};

}  // namespace empcnet
