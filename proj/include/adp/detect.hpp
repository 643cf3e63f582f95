#ifndef ADP_DETECT_HPP
#define ADP_DETECT_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adp/models.hpp"
#include "adp/purify.hpp"

namespace adp {

struct DetectConfig {
  double s_th = 25.0;
  double beta = 0.2;
  double base_sigma = 0.25;

  void validate() const;
};

enum class Verdict { Natural, Attacked };

const char* to_string(Verdict v);

double score_norm(const ScoreFn& score, std::span<const double> x);

// Attacked iff the score norm is strictly above s_th.
Verdict detect(const ScoreFn& score, std::span<const double> x, const DetectConfig& cfg);

struct DualNoiseResult {
  EnsemblePrediction prediction;
  Verdict verdict = Verdict::Natural;
  double sigma_used = 0.0;
};

// Detect once, then purify with base_sigma (attacked) or beta * base_sigma (natural).
DualNoiseResult dual_noise_purify(const ScoreFn& score, const MlpModel& classifier, std::span<const double> x,
                                  const PurifyConfig& purify_cfg, const DetectConfig& detect_cfg, const RngStream& rng);

struct NamedValues {
  std::string name;
  std::vector<double> values;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 shared edges
  std::vector<std::string> sets;
  std::vector<std::vector<std::size_t>> counts;  // [set][bin]
};

// Shared equal-width grid over the pooled range; the top edge is inclusive.
Histogram histogram(const std::vector<NamedValues>& sets, std::size_t bins);

struct NamedPoints {
  std::string name;
  Matrix points;
};

Histogram score_norm_histogram(const ScoreFn& score, const std::vector<NamedPoints>& sets, std::size_t bins = 20);

// Nearest-rank quantile of natural score norms (0.95 by default).
double calibrate_threshold(std::vector<double> natural_norms, double quantile = 0.95);

// Probability that an attacked norm exceeds a natural one (ties count half).
double detection_auc(std::span<const double> natural_norms, std::span<const double> attacked_norms);

}  // namespace adp

#endif  // ADP_DETECT_HPP
