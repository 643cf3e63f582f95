#ifndef ADP_ATTACKS_HPP
#define ADP_ATTACKS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adp/models.hpp"
#include "adp/numerics.hpp"
#include "adp/purify.hpp"

namespace adp {

// Full preprocessing map as seen by an attacker. The stream supplies any
// internal randomness (noise injection); deterministic purifiers ignore it.
using Purifier = std::function<Vector(std::span<const double>, RngStream&)>;

Purifier identity_purifier();

enum class SpsaDirections {
  Independent,       // i.i.d. Rademacher vectors
  OrthogonalBlocks,  // sign-randomized Hadamard rows; each block averages v v^T to I
};

struct AttackConfig {
  ThreatModel threat;
  std::size_t steps = 40;
  double step_size = 0.0;  // 0 selects 2.5 * epsilon / steps
  std::size_t eot_samples = 1;
  double eot_sigma = 0.0;
  double joint_weight = 0.5;
  std::size_t spsa_queries = 1280;
  double spsa_perturb = 0.01;
  SpsaDirections spsa_directions = SpsaDirections::OrthogonalBlocks;
  double unroll_step = 0.0;  // alpha_0 of the one-step unrolled purifier
  std::uint64_t seed = 0;
  BoxDomain box;

  void validate() const;
  double effective_step_size() const;
};

struct AttackResult {
  Vector adversarial;
  bool success = false;  // attacked pipeline label != true label
  std::size_t queries = 0;
  std::vector<double> loss_trace;  // attacker objective at the start and after each step
};

// Preprocessor-blind PGD on the bare classifier: sign step (Linf) or
// normalized step (L2), then projection onto the threat ball and box.
AttackResult pgd(const MlpModel& classifier, std::span<const double> x, std::size_t y, const AttackConfig& cfg);

// BPDA with the identity as backward approximation: the classifier gradient
// is taken at purify(x_t) and applied to x_t. With eot_samples > 1 the
// gradient is averaged over independent purifier streams (BPDA+EOT).
AttackResult bpda(const Purifier& purifier, const MlpModel& classifier, std::span<const double> x, std::size_t y,
                  const AttackConfig& cfg);

using EotGradFn = std::function<Vector(std::span<const double>, RngStream&)>;

// Mean of grad_fn(x + eps_i, stream_i) over n draws eps_i ~ N(0, sigma^2 I),
// accumulated as a running mean so identical samples reproduce the input bits.
Vector eot_gradient(const EotGradFn& grad_fn, std::span<const double> x, std::size_t n, double sigma,
                    const RngStream& rng);

using LossFn = std::function<double(std::span<const double>)>;

// Two-sided SPSA estimate from `queries` loss evaluations (queries / 2 directions).
Vector spsa_gradient(const LossFn& loss, std::span<const double> x, std::size_t queries, double perturb,
                     SpsaDirections mode, RngStream& rng);

// Black-box attack on loss_fn (the attacker's objective, larger is better for
// the attacker). y is only used for the success flag via label_fn.
AttackResult spsa_attack(const LossFn& loss_fn, const std::function<std::size_t(std::span<const double>)>& label_fn,
                         std::span<const double> x, std::size_t y, const AttackConfig& cfg);

// Direction w * n(grad L) + (1 - w) * n(-s(x)), n() the unit-L2 normalization.
AttackResult joint_score_attack(const MlpModel& classifier, const ScoreFn& score, std::span<const double> x,
                                std::size_t y, const AttackConfig& cfg);

// Direction w * n(grad L) + (1 - w) * n(x - f(x)).
AttackResult joint_full_attack(const MlpModel& classifier, const Purifier& purifier, std::span<const double> x,
                               std::size_t y, const AttackConfig& cfg);

// PGD step on the classifier, then purify the iterate and continue from there.
// Returns the last pre-purification iterate.
AttackResult approximate_input_attack(const MlpModel& classifier, const Purifier& purifier, std::span<const double> x,
                                      std::size_t y, const AttackConfig& cfg);

// Central-difference Jacobian of the score field, column j = ds/dx_j.
Matrix score_jacobian(const ScoreFn& score, std::span<const double> x, double h = 1e-5);

// Exact gradient through x -> g(x + alpha_0 s(x)).
Vector unrolled_input_grad(const MlpModel& classifier, const ScoreFn& score, std::span<const double> x, std::size_t y,
                           double alpha0);

AttackResult one_step_unrolling_attack(const MlpModel& classifier, const ScoreFn& score, std::span<const double> x,
                                       std::size_t y, const AttackConfig& cfg);

// Cross-entropy gradient of the bare classifier at x.
Vector classifier_loss_grad(const MlpModel& classifier, std::span<const double> x, std::size_t y);

}  // namespace adp

#endif  // ADP_ATTACKS_HPP
