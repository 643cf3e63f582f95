#include "adp/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adp/errors.hpp"

namespace adp {

namespace {

double activate(Activation a, double z) {
  if (a == Activation::Tanh) return std::tanh(z);
  // Stable softplus.
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double activate_deriv(Activation a, double z, double activated) {
  if (a == Activation::Tanh) return 1.0 - activated * activated;
  return 1.0 / (1.0 + std::exp(-z));
}

void check_input(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.spec().input_dim())
    throw ShapeError("mlp input has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(model.spec().input_dim()));
}

}  // namespace

void MlpSpec::validate() const {
  if (dims.size() < 2) throw ShapeError("MlpSpec needs at least one layer");
  for (std::size_t d : dims)
    if (d == 0) throw ShapeError("MlpSpec layer widths must be >= 1");
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) n += dims[i + 1] * dims[i] + dims[i + 1];
  return n;
}

MlpModel::MlpModel(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  params_.assign(spec_.param_count(), 0.0);
  build_offsets();
}

MlpModel::MlpModel(MlpSpec spec, std::vector<double> params) : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.size() != spec_.param_count())
    throw ShapeError("parameter count " + std::to_string(params_.size()) + " does not match spec (" +
                     std::to_string(spec_.param_count()) + ")");
  build_offsets();
}

MlpModel MlpModel::glorot(MlpSpec spec, RngStream& rng) {
  MlpModel model(std::move(spec));
  for (std::size_t l = 0; l < model.spec_.layer_count(); ++l) {
    const double fan_in = static_cast<double>(model.spec_.dims[l]);
    const double fan_out = static_cast<double>(model.spec_.dims[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : model.weights(l)) w = limit * (2.0 * rng.uniform() - 1.0);
  }
  return model;
}

void MlpModel::build_offsets() {
  offsets_.clear();
  std::size_t off = 0;
  for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
    offsets_.push_back(off);
    off += spec_.dims[l + 1] * spec_.dims[l] + spec_.dims[l + 1];
  }
}

std::span<const double> MlpModel::weights(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), spec_.dims[layer + 1] * spec_.dims[layer]};
}
std::span<const double> MlpModel::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), spec_.dims[layer + 1]};
}
std::span<double> MlpModel::weights(std::size_t layer) {
  return {params_.data() + weight_offset(layer), spec_.dims[layer + 1] * spec_.dims[layer]};
}
std::span<double> MlpModel::bias(std::size_t layer) { return {params_.data() + bias_offset(layer), spec_.dims[layer + 1]}; }

Vector mlp_forward(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  const auto& spec = model.spec();
  Vector in(x.begin(), x.end());
  Vector out;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t rows = spec.dims[l + 1], cols = spec.dims[l];
    const auto w = model.weights(l);
    const auto b = model.bias(l);
    out.assign(rows, 0.0);
    const bool hidden = l + 1 < spec.layer_count();
    for (std::size_t r = 0; r < rows; ++r) {
      double z = b[r];
      const double* wr = w.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) z += wr[c] * in[c];
      out[r] = hidden ? activate(spec.activation, z) : z;
    }
    in.swap(out);
  }
  return in;
}

Vector mlp_backward(const MlpModel& model, std::span<const double> x, std::span<const double> upstream,
                    std::span<double> param_grad, std::span<double> input_grad) {
  check_input(model, x);
  const auto& spec = model.spec();
  if (upstream.size() != spec.output_dim()) throw ShapeError("upstream gradient dimension mismatch");
  if (!param_grad.empty() && param_grad.size() != spec.param_count())
    throw ShapeError("parameter gradient buffer has wrong size");
  if (!input_grad.empty() && input_grad.size() != spec.input_dim())
    throw ShapeError("input gradient buffer has wrong size");

  const std::size_t layers = spec.layer_count();
  // acts[l] is the input to layer l; pre[l] the pre-activation of layer l.
  std::vector<Vector> acts(layers + 1), pre(layers);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = spec.dims[l + 1], cols = spec.dims[l];
    const auto w = model.weights(l);
    const auto b = model.bias(l);
    pre[l].assign(rows, 0.0);
    acts[l + 1].assign(rows, 0.0);
    const bool hidden = l + 1 < layers;
    for (std::size_t r = 0; r < rows; ++r) {
      double z = b[r];
      const double* wr = w.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) z += wr[c] * acts[l][c];
      pre[l][r] = z;
      acts[l + 1][r] = hidden ? activate(spec.activation, z) : z;
    }
  }

  Vector delta(upstream.begin(), upstream.end());
  Vector prev;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t rows = spec.dims[l + 1], cols = spec.dims[l];
    const auto w = model.weights(l);
    if (!param_grad.empty()) {
      double* gw = param_grad.data() + model.weight_offset(l);
      double* gb = param_grad.data() + model.bias_offset(l);
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = delta[r];
        gb[r] += d;
        if (d == 0.0) continue;
        double* gwr = gw + r * cols;
        for (std::size_t c = 0; c < cols; ++c) gwr[c] += d * acts[l][c];
      }
    }
    if (l == 0 && input_grad.empty()) break;
    prev.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* wr = w.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) prev[c] += wr[c] * d;
    }
    if (l > 0)
      for (std::size_t c = 0; c < cols; ++c) prev[c] *= activate_deriv(spec.activation, pre[l - 1][c], acts[l][c]);
    delta.swap(prev);
  }
  if (!input_grad.empty()) std::copy(delta.begin(), delta.end(), input_grad.begin());
  return acts[layers];
}

Vector mlp_input_grad(const MlpModel& model, std::span<const double> x, std::span<const double> upstream) {
  Vector g(model.spec().input_dim(), 0.0);
  mlp_backward(model, x, upstream, {}, g);
  return g;
}

Vector mlp_param_grad(const MlpModel& model, std::span<const double> x, std::span<const double> upstream) {
  Vector g(model.spec().param_count(), 0.0);
  mlp_backward(model, x, upstream, g, {});
  return g;
}

Vector score(const MlpModel& model, std::span<const double> x, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("score: sigma must be > 0");
  Vector out = mlp_forward(model, x);
  for (double& v : out) v /= sigma;
  return out;
}

Vector softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size())
    throw IndexError("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) +
                     " classes");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double log_norm = m + std::log(sum);
  CrossEntropy out;
  out.loss = log_norm - logits[label];
  out.dlogits.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.dlogits[k] = std::exp(logits[k] - log_norm);
  out.dlogits[label] -= 1.0;
  return out;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t predict_label(const MlpModel& classifier, std::span<const double> x) {
  return argmax(mlp_forward(classifier, x));
}

}  // namespace adp
