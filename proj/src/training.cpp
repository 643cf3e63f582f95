#include "adp/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adp/errors.hpp"

namespace adp {

namespace {

enum StreamId : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kNoiseStream = 3, kHoldoutStream = 4 };

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

Split shuffled_split(std::size_t n, double holdout_fraction, RngStream rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  auto held = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
  if (held >= n) held = n - 1;
  Split s;
  s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(held));
  s.holdout.assign(order.end() - static_cast<std::ptrdiff_t>(held), order.end());
  return s;
}

void shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

// Shared minibatch loop. batch_loss(rows, rng) returns loss and gradient of the
// batch-mean loss.
template <typename BatchLoss>
std::vector<double> run_epochs(MlpModel& model, const std::vector<std::size_t>& train_rows, const TrainConfig& config,
                               BatchLoss&& batch_loss) {
  AdamState adam(model.spec().param_count());
  adam.lr = config.lr;
  RngStream shuffle_rng = RngStream(config.seed).derive(kShuffleStream).derive(1);
  const RngStream noise_root = RngStream(config.seed).derive(kNoiseStream);
  std::vector<double> losses;
  std::vector<std::size_t> order = train_rows;
  std::uint64_t batch_counter = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> rows(order.data() + start, end - start);
      RngStream noise = noise_root.derive(batch_counter++);
      LossAndGrad lg = batch_loss(model, rows, noise);
      adam_step(adam, model.params(), lg.grads);
      total += lg.loss;
      ++batches;
    }
    losses.push_back(batches ? total / static_cast<double>(batches) : 0.0);
  }
  return losses;
}

}  // namespace

void NoiseSchedule::validate() const {
  if (levels.empty()) throw DomainError("noise schedule must have at least one level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0) || !std::isfinite(levels[i])) throw DomainError("noise levels must be finite and > 0");
    if (i > 0 && levels[i] > levels[i - 1]) throw DomainError("noise levels must be non-increasing");
  }
}

NoiseSchedule make_noise_schedule(double sigma1, double sigmaL, std::size_t count) {
  if (count == 0) throw DomainError("noise schedule needs L >= 1");
  if (!(sigmaL > 0.0) || !(sigma1 >= sigmaL))
    throw DomainError("noise schedule needs sigma1 >= sigmaL > 0 (got " + std::to_string(sigma1) + ", " +
                      std::to_string(sigmaL) + ")");
  NoiseSchedule s;
  if (count == 1) {
    s.levels = {sigma1};
    return s;
  }
  const double ratio = sigmaL / sigma1;
  for (std::size_t j = 0; j < count; ++j)
    s.levels.push_back(sigma1 * std::pow(ratio, static_cast<double>(j) / static_cast<double>(count - 1)));
  s.levels.back() = sigmaL;
  return s;
}

double sigma1_from_data(const Matrix& data) {
  if (data.rows < 2) throw InsufficientData("sigma1_from_data needs at least 2 rows");
  const auto rows = pairwise_subsample(data.rows);
  double best = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b)
      best = std::max(best, l2_distance(data.row(rows[a]), data.row(rows[b])));
  return best;
}

Matrix gather_rows(const Matrix& data, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), data.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = data.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

LossAndGrad dsm_loss_fixed_noise(const MlpModel& model, const Matrix& batch, const Matrix& noisy, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("dsm loss: sigma must be > 0");
  if (batch.rows != noisy.rows || batch.cols != noisy.cols) throw ShapeError("dsm loss: batch/noisy shape mismatch");
  if (batch.rows == 0) throw InsufficientData("dsm loss: empty batch");
  LossAndGrad out;
  out.grads.assign(model.spec().param_count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.rows);
  const double s2 = sigma * sigma;
  const double s3 = s2 * sigma;
  const double s4 = s2 * s2;
  Vector residual(batch.cols);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const auto x = batch.row(i);
    const auto xt = noisy.row(i);
    const Vector f = mlp_forward(model, xt);
    // x~ + sigma^2 * f(x~)/sigma - x
    double sq = 0.0;
    for (std::size_t d = 0; d < batch.cols; ++d) {
      residual[d] = xt[d] + sigma * f[d] - x[d];
      sq += residual[d] * residual[d];
    }
    out.loss += sq / (2.0 * s4) * inv_n;
    for (double& r : residual) r *= inv_n / s3;
    mlp_backward(model, xt, residual, out.grads, {});
  }
  return out;
}

LossAndGrad dsm_loss_and_grad(const MlpModel& model, const Matrix& batch, double sigma, RngStream& rng) {
  if (!(sigma > 0.0)) throw DomainError("dsm loss: sigma must be > 0");
  Matrix noisy = batch;
  for (double& v : noisy.data) v += sigma * rng.normal();
  return dsm_loss_fixed_noise(model, batch, noisy, sigma);
}

LossAndGrad ncsn_loss(const MlpModel& model, const Matrix& batch, const NoiseSchedule& schedule, RngStream& rng) {
  schedule.validate();
  LossAndGrad total;
  total.grads.assign(model.spec().param_count(), 0.0);
  for (double sigma : schedule.levels) {
    const LossAndGrad level = dsm_loss_and_grad(model, batch, sigma, rng);
    const double w = sigma * sigma;
    total.loss += w * level.loss;
    for (std::size_t k = 0; k < total.grads.size(); ++k) total.grads[k] += w * level.grads[k];
  }
  return total;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: parameter, gradient and accumulator sizes differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw DomainError("train config: batch_size must be >= 1");
  if (!(lr > 0.0)) throw DomainError("train config: lr must be > 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw DomainError("train config: holdout_fraction in [0,1)");
}

TrainResult train_score(const MlpSpec& spec, const Matrix& data, const TrainConfig& config) {
  config.validate();
  config.schedule.validate();
  if (data.rows == 0) throw InsufficientData("train_score: empty dataset");
  if (spec.input_dim() != data.cols || spec.output_dim() != data.cols)
    throw ShapeError("train_score: score network must map D -> D with D = " + std::to_string(data.cols));

  RngStream init_rng = RngStream(config.seed).derive(kInitStream);
  TrainResult result{MlpModel::glorot(spec, init_rng), {}, 0.0, 0.0};
  const Split split = shuffled_split(data.rows, config.holdout_fraction, RngStream(config.seed).derive(kShuffleStream));
  const Matrix holdout = gather_rows(data, split.holdout);
  auto holdout_loss = [&](const MlpModel& m) {
    if (holdout.rows == 0) return 0.0;
    RngStream rng = RngStream(config.seed).derive(kHoldoutStream);
    return ncsn_loss(m, holdout, config.schedule, rng).loss;
  };
  result.holdout_initial = holdout_loss(result.model);
  result.epoch_losses =
      run_epochs(result.model, split.train, config, [&](const MlpModel& m, std::span<const std::size_t> rows, RngStream& rng) {
        return ncsn_loss(m, gather_rows(data, rows), config.schedule, rng);
      });
  result.holdout_final = holdout_loss(result.model);
  return result;
}

TrainResult train_classifier(const MlpSpec& spec, const Matrix& features, std::span<const std::size_t> labels,
                             const TrainConfig& config) {
  config.validate();
  if (features.rows == 0) throw InsufficientData("train_classifier: empty dataset");
  if (labels.size() != features.rows) throw ShapeError("train_classifier: label count differs from row count");
  if (spec.input_dim() != features.cols) throw ShapeError("train_classifier: input dimension mismatch");
  for (std::size_t y : labels)
    if (y >= spec.output_dim()) throw IndexError("train_classifier: label " + std::to_string(y) + " out of range");

  RngStream init_rng = RngStream(config.seed).derive(kInitStream);
  TrainResult result{MlpModel::glorot(spec, init_rng), {}, 0.0, 0.0};
  const Split split =
      shuffled_split(features.rows, config.holdout_fraction, RngStream(config.seed).derive(kShuffleStream));

  auto ce_batch = [&](const MlpModel& m, std::span<const std::size_t> rows) {
    LossAndGrad lg;
    lg.grads.assign(m.spec().param_count(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
      const auto x = features.row(r);
      const Vector logits = mlp_forward(m, x);
      CrossEntropy ce = softmax_cross_entropy(logits, labels[r]);
      lg.loss += ce.loss * inv_n;
      for (double& d : ce.dlogits) d *= inv_n;
      mlp_backward(m, x, ce.dlogits, lg.grads, {});
    }
    return lg;
  };
  auto holdout_loss = [&](const MlpModel& m) { return split.holdout.empty() ? 0.0 : ce_batch(m, split.holdout).loss; };
  result.holdout_initial = holdout_loss(result.model);
  result.epoch_losses = run_epochs(result.model, split.train, config,
                                   [&](const MlpModel& m, std::span<const std::size_t> rows, RngStream&) {
                                     return ce_batch(m, rows);
                                   });
  result.holdout_final = holdout_loss(result.model);
  return result;
}

double classifier_accuracy(const MlpModel& classifier, const Matrix& features, std::span<const std::size_t> labels) {
  if (features.rows == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.rows; ++i) correct += predict_label(classifier, features.row(i)) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(features.rows);
}

}  // namespace adp
