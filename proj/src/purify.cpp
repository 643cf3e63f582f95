#include "adp/purify.hpp"

#include <algorithm>
#include <cmath>

#include "adp/errors.hpp"

namespace adp {

ScoreFn conditioned_score(const MlpModel& model, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("conditioned_score: sigma must be > 0");
  return [&model, sigma](std::span<const double> x) { return score(model, x, sigma); };
}

void PurifyConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("purify: lambda must lie in (0, 1)");
  if (!(delta > 0.0)) throw DomainError("purify: delta must be > 0");
  if (!(sigma >= 0.0)) throw DomainError("purify: sigma must be >= 0");
  if (runs < 1) throw DomainError("purify: runs (S) must be >= 1");
  if (max_steps < 1) throw DomainError("purify: max_steps (T) must be >= 1");
  if (!(tau_stop >= 0.0)) throw DomainError("purify: tau_stop must be >= 0");
  box.validate();
}

double adaptive_step_size(std::span<const double> s_t, std::span<const double> s_probe, double lambda, double delta) {
  if (s_t.size() != s_probe.size()) throw ShapeError("adaptive_step_size: dimension mismatch");
  const double sq = dot(s_t, s_t);
  if (!(sq > 0.0)) throw DomainError("adaptive_step_size: score is zero");
  const double denom = 1.0 - dot(s_t, s_probe) / sq;
  if (std::abs(denom) < 1e-12 || denom < 0.0)
    throw DegenerateCurvature("adaptive step denominator " + std::to_string(denom) + " is degenerate");
  return lambda * delta / denom;
}

PurifyTrajectory deterministic_purify(const ScoreFn& score, std::span<const double> x0, const PurifyConfig& config,
                                      std::optional<std::span<const double>> fixed_steps) {
  config.validate();
  PurifyTrajectory traj;
  traj.states.emplace_back(x0.begin(), x0.end());
  const std::size_t budget = fixed_steps ? std::min(config.max_steps, fixed_steps->size()) : config.max_steps;
  Vector x(x0.begin(), x0.end());
  Vector probe(x.size());
  for (std::size_t t = 0; t < budget; ++t) {
    const Vector s = score(x);
    const double norm = l2_norm(s);
    traj.score_norms.push_back(norm);
    if (config.stop_rule == StopRule::ScoreNorm && norm < config.tau_stop) {
      traj.stopped_early = true;
      break;
    }
    double alpha;
    if (fixed_steps) {
      alpha = (*fixed_steps)[t];
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + config.delta * s[i];
      try {
        alpha = adaptive_step_size(s, score(probe), config.lambda, config.delta);
      } catch (const Error&) {
        // DegenerateCurvature, or a zero score under the step-size rule.
        traj.stopped_early = true;
        traj.degenerate = true;
        break;
      }
    }
    if (config.stop_rule == StopRule::StepSize && alpha < config.tau_stop) {
      traj.stopped_early = true;
      break;
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * s[i];
    config.box.clamp(x);
    traj.step_sizes.push_back(alpha);
    traj.states.push_back(x);
  }
  return traj;
}

Vector noisy_purify_run(const ScoreFn& score, std::span<const double> x, const PurifyConfig& config, RngStream& rng,
                        std::optional<std::span<const double>> fixed_steps) {
  Vector start(x.begin(), x.end());
  const Vector noise = gaussian_sample(rng, start.size(), 0.0, config.sigma);
  for (std::size_t i = 0; i < start.size(); ++i) start[i] += noise[i];
  config.box.clamp(start);
  return deterministic_purify(score, start, config, fixed_steps).last();
}

EnsemblePrediction ensemble_from_runs(const MlpModel& classifier, std::vector<Vector> purified, EnsembleMode mode) {
  if (purified.empty()) throw InsufficientData("ensemble needs at least one run");
  std::vector<Vector> outputs;
  outputs.reserve(purified.size());
  for (const Vector& p : purified) {
    Vector logits = mlp_forward(classifier, p);
    if (mode == EnsembleMode::PostSoftmax) {
      logits = softmax(logits);
    } else if (mode == EnsembleMode::ArgmaxVote) {
      Vector vote(logits.size(), 0.0);
      vote[argmax(logits)] = 1.0;
      logits = std::move(vote);
    }
    outputs.push_back(std::move(logits));
  }
  // Canonical order makes the floating-point sum independent of run order.
  std::sort(outputs.begin(), outputs.end());
  EnsemblePrediction out;
  out.class_scores.assign(outputs.front().size(), 0.0);
  for (const Vector& o : outputs)
    for (std::size_t k = 0; k < o.size(); ++k) out.class_scores[k] += o[k];
  for (double& v : out.class_scores) v /= static_cast<double>(outputs.size());
  out.label = argmax(out.class_scores);
  out.purified = std::move(purified);
  return out;
}

EnsemblePrediction ensemble_predict(const ScoreFn& score, const MlpModel& classifier, std::span<const double> x,
                                    const PurifyConfig& config, const RngStream& rng,
                                    std::optional<std::span<const double>> fixed_steps) {
  config.validate();
  std::vector<Vector> runs;
  runs.reserve(config.runs);
  for (std::size_t s = 0; s < config.runs; ++s) {
    RngStream run_rng = rng.derive(s);
    runs.push_back(noisy_purify_run(score, x, config, run_rng, fixed_steps));
  }
  return ensemble_from_runs(classifier, std::move(runs), config.ensemble);
}

Vector langevin_step(const ScoreFn& score, std::span<const double> x, double alpha, std::span<const double> noise) {
  const Vector s = score(x);
  const double root = std::sqrt(alpha);
  Vector out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.5 * alpha * s[i] + root * noise[i];
  return out;
}

Vector langevin_purify(const ScoreFn& score, std::span<const double> x, std::size_t steps, double alpha,
                       RngStream& rng, const BoxDomain& box) {
  if (!(alpha >= 0.0)) throw DomainError("langevin_purify: alpha must be >= 0");
  Vector cur(x.begin(), x.end());
  if (alpha == 0.0) return cur;
  for (std::size_t t = 0; t < steps; ++t) {
    const Vector noise = gaussian_sample(rng, cur.size(), 0.0, 1.0);
    cur = langevin_step(score, cur, alpha, noise);
    box.clamp(cur);
  }
  return cur;
}

}  // namespace adp
