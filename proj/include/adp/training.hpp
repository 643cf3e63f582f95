#ifndef ADP_TRAINING_HPP
#define ADP_TRAINING_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adp/models.hpp"
#include "adp/numerics.hpp"

namespace adp {

// Non-increasing noise levels sigma_1 >= ... >= sigma_L > 0.
struct NoiseSchedule {
  std::vector<double> levels;

  void validate() const;
  double finest() const { return levels.back(); }
};

// Geometric interpolation from sigma1 down to sigmaL.
NoiseSchedule make_noise_schedule(double sigma1, double sigmaL, std::size_t count);

// Largest pairwise L2 distance (over the bounded subsample used by the
// median heuristic). Returns 0 for identical points; callers must reject that.
double sigma1_from_data(const Matrix& data);

struct LossAndGrad {
  double loss = 0.0;
  Vector grads;  // flat, same layout as MlpModel::params()
};

/// Denoising score matching loss for one noise level:
///   mean over rows of |x~ + sigma^2 s(x~) - x|^2 / (2 sigma^4),
/// with s(x~) = f(x~) / sigma and x~ = x + noise.
/// `noisy` holds the perturbed rows; the gradient is exact for that draw.
LossAndGrad dsm_loss_fixed_noise(const MlpModel& model, const Matrix& batch, const Matrix& noisy, double sigma);

// Draws x~ = x + sigma z with one z per row, then evaluates the fixed-noise loss.
LossAndGrad dsm_loss_and_grad(const MlpModel& model, const Matrix& batch, double sigma, RngStream& rng);

// sum_j sigma_j^2 * dsm(sigma_j), with independent noise per level.
LossAndGrad ncsn_loss(const MlpModel& model, const Matrix& batch, const NoiseSchedule& schedule, RngStream& rng);

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  Vector m;
  Vector v;

  explicit AdamState(std::size_t n_params = 0) : m(n_params, 0.0), v(n_params, 0.0) {}
};

// One bias-corrected Adam update, in place. No weight decay.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double lr = 0.001;
  std::uint64_t seed = 0;
  NoiseSchedule schedule;
  double holdout_fraction = 0.1;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> epoch_losses;  // mean minibatch loss per epoch
  double holdout_initial = 0.0;
  double holdout_final = 0.0;
};

// Minibatch Adam on the multi-level loss. The last holdout_fraction of the
// seeded shuffle is held out and only evaluated.
TrainResult train_score(const MlpSpec& spec, const Matrix& data, const TrainConfig& config);

TrainResult train_classifier(const MlpSpec& spec, const Matrix& features, std::span<const std::size_t> labels,
                             const TrainConfig& config);

double classifier_accuracy(const MlpModel& classifier, const Matrix& features, std::span<const std::size_t> labels);

Matrix gather_rows(const Matrix& data, std::span<const std::size_t> rows);

}  // namespace adp

#endif  // ADP_TRAINING_HPP
