#ifndef ADP_MODELS_HPP
#define ADP_MODELS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "adp/numerics.hpp"

namespace adp {

enum class Activation { Tanh, Softplus };

// Layer widths [d_0, ..., d_m]; the activation applies to hidden layers only,
// the output layer is linear.
struct MlpSpec {
  std::vector<std::size_t> dims;
  Activation activation = Activation::Tanh;

  void validate() const;
  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }
  std::size_t layer_count() const { return dims.size() - 1; }
  std::size_t param_count() const;

  bool operator==(const MlpSpec&) const = default;
};

/// Fully-connected network with all parameters in one flat array.
///
/// Layout is layer-major: W_1 (d_1 x d_0, row-major), b_1, W_2, b_2, ...
/// Parameter gradients use the same layout, which is also the checkpoint layout.
class MlpModel {
 public:
  MlpModel() = default;
  // Zero-initialized parameters.
  explicit MlpModel(MlpSpec spec);
  MlpModel(MlpSpec spec, std::vector<double> params);

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static MlpModel glorot(MlpSpec spec, RngStream& rng);

  const MlpSpec& spec() const { return spec_; }
  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + spec_.dims[layer + 1] * spec_.dims[layer];
  }
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);

 private:
  void build_offsets();

  MlpSpec spec_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
};

using LogitVector = Vector;

Vector mlp_forward(const MlpModel& model, std::span<const double> x);

// J^T * upstream, J the Jacobian of mlp_forward at x.
Vector mlp_input_grad(const MlpModel& model, std::span<const double> x, std::span<const double> upstream);

// Gradient of upstream^T f(x) w.r.t. every parameter (flat layout).
Vector mlp_param_grad(const MlpModel& model, std::span<const double> x, std::span<const double> upstream);

// Combined reverse pass. Adds the parameter gradient into param_grad when it
// is non-empty and writes the input gradient into input_grad when non-empty.
// Returns the forward output.
Vector mlp_backward(const MlpModel& model, std::span<const double> x, std::span<const double> upstream,
                    std::span<double> param_grad, std::span<double> input_grad);

// Noise-conditioned score s(x, sigma) = f(x) / sigma.
Vector score(const MlpModel& model, std::span<const double> x, double sigma);

Vector softmax(std::span<const double> logits);

struct CrossEntropy {
  double loss = 0.0;
  Vector dlogits;
};

CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t label);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

std::size_t predict_label(const MlpModel& classifier, std::span<const double> x);

}  // namespace adp

#endif  // ADP_MODELS_HPP
