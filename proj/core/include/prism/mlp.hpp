#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prism/rng.hpp"

namespace prism {

// Fully connected ReLU network with a softmax/cross-entropy head. All
// parameters live in one flat vector; layer l stores its weight matrix
// (out x in, row-major) followed by its bias (out).
class Mlp {
 public:
  Mlp() = default;
  // widths = {input, hidden..., output}; parameters start at zero.
  explicit Mlp(std::vector<std::size_t> widths);

  // Uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static Mlp glorot_uniform(std::vector<std::size_t> widths, Rng& rng);

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  std::size_t layer_count() const { return widths_.size() - 1; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }

  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  // Inference logits; dropout never applies here.
  std::vector<double> logits(std::span<const double> x) const;

  // Mean cross-entropy over `batch` (rows of input_dim doubles) with integer
  // class targets. Adds d(loss)/d(params) into `grad` (sized like
  // parameters()). When `dropout_rng` is given, units after the first hidden
  // layer are zeroed with probability `dropout` and the rest scaled by
  // 1/(1-dropout).
  double accumulate_gradients(std::span<const double> batch, std::span<const std::uint8_t> targets,
                              std::vector<double>& grad, Rng* dropout_rng = nullptr,
                              double dropout = 0.0) const;

  double loss(std::span<const double> batch, std::span<const std::uint8_t> targets) const;

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t n_params, AdamConfig config);
  void step(std::vector<double>& params, std::span<const double> grad);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

// Softmax probability of class 1 for a two-logit output.
double softmax_class1(std::span<const double> logits);

}  // namespace prism
