#ifndef ADP_PURIFY_HPP
#define ADP_PURIFY_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adp/models.hpp"
#include "adp/numerics.hpp"

namespace adp {

// Any score field x -> s(x) of the same dimension.
using ScoreFn = std::function<Vector(std::span<const double>)>;

// s(x) = f(x) / sigma for a trained score network.
ScoreFn conditioned_score(const MlpModel& model, double sigma);

enum class StopRule { ScoreNorm, StepSize };
enum class EnsembleMode { PreSoftmax, PostSoftmax, ArgmaxVote };

struct PurifyConfig {
  double lambda = 0.05;
  double delta = 1e-5;
  double sigma = 0.25;       // injection noise std
  std::size_t runs = 10;     // S
  std::size_t max_steps = 10;  // T
  double tau_stop = 0.001;
  StopRule stop_rule = StopRule::ScoreNorm;
  EnsembleMode ensemble = EnsembleMode::PostSoftmax;
  BoxDomain box;

  void validate() const;
};

struct PurifyTrajectory {
  std::vector<Vector> states;
  std::vector<double> step_sizes;
  std::vector<double> score_norms;  // one per visited state whose score was evaluated
  bool stopped_early = false;
  bool degenerate = false;  // stopped on DegenerateCurvature

  const Vector& last() const { return states.back(); }
};

/// alpha = lambda * delta / (1 - s_t . s_probe / |s_t|^2), where s_probe is the
/// score at x_t + delta * s_t. For a locally Gaussian field -(x - mu)/c this is
/// lambda * c, which shrinks the score by (1 - lambda) per step.
/// Throws DegenerateCurvature when the denominator is below 1e-12 in magnitude
/// or negative; DomainError when s_t is zero.
double adaptive_step_size(std::span<const double> s_t, std::span<const double> s_probe, double lambda, double delta);

// x_t = x_{t-1} + alpha_{t-1} s(x_{t-1}), at most max_steps updates. A fixed
// step schedule replaces the adaptive rule when supplied.
PurifyTrajectory deterministic_purify(const ScoreFn& score, std::span<const double> x0, const PurifyConfig& config,
                                      std::optional<std::span<const double>> fixed_steps = std::nullopt);

// One purification run from x + N(0, sigma^2 I), the start clamped to the box.
Vector noisy_purify_run(const ScoreFn& score, std::span<const double> x, const PurifyConfig& config, RngStream& rng,
                        std::optional<std::span<const double>> fixed_steps = std::nullopt);

struct EnsemblePrediction {
  std::size_t label = 0;
  Vector class_scores;
  std::vector<Vector> purified;
};

// Reduces classifier outputs over purified runs. The reduction order is
// canonical, so any permutation of `purified` yields bit-identical scores.
EnsemblePrediction ensemble_from_runs(const MlpModel& classifier, std::vector<Vector> purified, EnsembleMode mode);

// S noisy runs on rng.derive(0..S-1), reduced per config.ensemble.
EnsemblePrediction ensemble_predict(const ScoreFn& score, const MlpModel& classifier, std::span<const double> x,
                                    const PurifyConfig& config, const RngStream& rng,
                                    std::optional<std::span<const double>> fixed_steps = std::nullopt);

// One Langevin update x + (alpha/2) s(x) + sqrt(alpha) * noise, noise ~ N(0, I) supplied.
Vector langevin_step(const ScoreFn& score, std::span<const double> x, double alpha, std::span<const double> noise);

Vector langevin_purify(const ScoreFn& score, std::span<const double> x, std::size_t steps, double alpha,
                       RngStream& rng, const BoxDomain& box);

}  // namespace adp

#endif  // ADP_PURIFY_HPP
