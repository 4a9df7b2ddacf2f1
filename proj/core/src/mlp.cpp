#include "prism/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "prism/error.hpp"

namespace prism {

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw DataError("an MLP needs at least input and output widths");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::glorot_uniform(std::vector<std::size_t> widths, Rng& rng) {
  Mlp net(std::move(widths));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const std::size_t fan_in = net.widths_[l];
    const std::size_t fan_out = net.widths_[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    double* w = net.params_.data() + net.weight_offset(l);
    for (std::size_t k = 0; k < fan_in * fan_out; ++k) w[k] = rng.uniform(-limit, limit);
  }
  return net;
}

std::vector<double> Mlp::logits(std::span<const double> x) const {
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) s += row[i] * h[i];
      z[o] = (l + 1 < layer_count()) ? std::max(s, 0.0) : s;
    }
    h = std::move(z);
  }
  return h;
}

double Mlp::accumulate_gradients(std::span<const double> batch,
                                 std::span<const std::uint8_t> targets, std::vector<double>& grad,
                                 Rng* dropout_rng, double dropout) const {
  const std::size_t n = targets.size();
  const std::size_t layers = layer_count();
  if (batch.size() != n * input_dim()) throw DataError("batch shape does not match network input");
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(n);
  const double keep_scale = dropout > 0.0 ? 1.0 / (1.0 - dropout) : 1.0;
  double total_loss = 0.0;

  // activations[l] is the input to layer l (post ReLU / dropout)
  std::vector<std::vector<double>> activations(layers + 1);
  std::vector<std::vector<double>> pre(layers);
  std::vector<double> mask;

  for (std::size_t s = 0; s < n; ++s) {
    activations[0].assign(batch.begin() + s * input_dim(), batch.begin() + (s + 1) * input_dim());
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = widths_[l];
      const std::size_t out = widths_[l + 1];
      const double* w = params_.data() + weight_offset(l);
      const double* b = params_.data() + bias_offset(l);
      pre[l].assign(out, 0.0);
      auto& next = activations[l + 1];
      next.assign(out, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        double z = b[o];
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) z += row[i] * activations[l][i];
        pre[l][o] = z;
        next[o] = (l + 1 < layers) ? std::max(z, 0.0) : z;
      }
      if (l == 0 && layers > 1 && dropout_rng != nullptr && dropout > 0.0) {
        mask.assign(out, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
          mask[o] = dropout_rng->bernoulli(dropout) ? 0.0 : keep_scale;
          next[o] *= mask[o];
        }
      }
    }

    // softmax cross-entropy on the final logits
    const auto& logit = activations[layers];
    const double max_logit = *std::max_element(logit.begin(), logit.end());
    double denom = 0.0;
    for (double z : logit) denom += std::exp(z - max_logit);
    const std::size_t target = targets[s];
    total_loss += -(logit[target] - max_logit - std::log(denom));

    std::vector<double> delta(logit.size());
    for (std::size_t o = 0; o < logit.size(); ++o) {
      delta[o] = (std::exp(logit[o] - max_logit) / denom - (o == target ? 1.0 : 0.0)) * inv_n;
    }

    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = widths_[l];
      const std::size_t out = widths_[l + 1];
      const double* w = params_.data() + weight_offset(l);
      double* gw = grad.data() + weight_offset(l);
      double* gb = grad.data() + bias_offset(l);
      const auto& input = activations[l];
      for (std::size_t o = 0; o < out; ++o) {
        gb[o] += delta[o];
        double* grow = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) grow[i] += delta[o] * input[i];
      }
      if (l == 0) break;
      std::vector<double> back(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) back[i] += row[i] * delta[o];
      }
      // input to layer l is ReLU(pre[l-1]), possibly masked
      for (std::size_t i = 0; i < in; ++i) {
        double g = pre[l - 1][i] > 0.0 ? back[i] : 0.0;
        if (l == 1 && !mask.empty()) g *= mask[i];
        back[i] = g;
      }
      delta = std::move(back);
    }
  }
  return total_loss * inv_n;
}

double Mlp::loss(std::span<const double> batch, std::span<const std::uint8_t> targets) const {
  const std::size_t n = targets.size();
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto z = logits(batch.subspan(s * input_dim(), input_dim()));
    const double max_logit = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - max_logit);
    total += -(z[targets[s]] - max_logit - std::log(denom));
  }
  return total / static_cast<double>(n);
}

Adam::Adam(std::size_t n_params, AdamConfig config)
    : config_(config), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::vector<double>& params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * grad[k];
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * grad[k] * grad[k];
    const double m_hat = m_[k] / c1;
    const double v_hat = v_[k] / c2;
    params[k] -= config_.step * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

double softmax_class1(std::span<const double> logits) {
  return 1.0 / (1.0 + std::exp(logits[0] - logits[1]));
}

}  // namespace prism
