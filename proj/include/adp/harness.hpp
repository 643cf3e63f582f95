#ifndef ADP_HARNESS_HPP
#define ADP_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/attacks.hpp"
#include "adp/certify.hpp"
#include "adp/checkpoint.hpp"
#include "adp/config.hpp"
#include "adp/dataset.hpp"
#include "adp/detect.hpp"
#include "adp/purify.hpp"
#include "adp/training.hpp"

namespace adp {

// Explicit request if > 0 (capped by ADP_THREADS), else ADP_THREADS if set,
// else hardware concurrency.
std::size_t worker_count(std::size_t requested = 0);

// fn(i) for every i in [0, n) on at most `workers` threads. If any call
// throws, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Every random choice of an experiment comes from the master seed.
enum class SeedPurpose : std::uint64_t { Classifier = 1, Score = 2, Attack = 3, Purify = 4, Certify = 5, Detect = 6 };
std::uint64_t derive_seed(std::uint64_t master, SeedPurpose purpose);

// Generated, loaded from a dataset file, or parsed from IDX files.
Dataset load_data(const DataSection& cfg);
// Split seeded by the dataset's own seed, so every subcommand sees the same split.
DatasetSplit split_data(const Dataset& ds, const DataSection& cfg);

// Smallest L2 distance between per-class feature means.
double class_mean_gap(const Dataset& ds);

Checkpoint train_classifier_checkpoint(const NetworkSection& cfg, const Dataset& train, std::uint64_t seed);
Checkpoint train_score_checkpoint(const ScoreSection& cfg, const Dataset& train, std::uint64_t seed);

// Conditioning level of a score checkpoint (its finest training noise level).
double checkpoint_sigma_min(const Checkpoint& ckpt);

// Models, data and resolved hyperparameters of one experiment.
struct Pipeline {
  Dataset train;
  Dataset test;
  Checkpoint classifier;
  Checkpoint score_model;
  double sigma_min = 0.01;
  PurifyConfig purify;   // sigma resolved
  ThreatModel threat;    // epsilon resolved
  double class_gap = 0.0;

  const MlpModel& clf() const { return classifier.model; }
  ScoreFn score() const { return conditioned_score(score_model.model, sigma_min); }
};

// Loads checkpoints named in the config and trains the others.
Pipeline build_pipeline(const ExperimentConfig& cfg);

// Resolves purify sigma and threat epsilon against the pipeline's data.
void resolve_pipeline(const ExperimentConfig& cfg, Pipeline& p);

// The configured attack on sample `index` (its streams derive from the master seed and index).
AttackResult run_attack(const ExperimentConfig& cfg, const Pipeline& p, std::span<const double> x, std::size_t y,
                        std::size_t index);

// One ADP purification run as the attacker sees it.
Purifier adp_purifier(const Pipeline& p, std::optional<Vector> fixed_steps = std::nullopt);

// Stream used by the defender for sample `index`.
RngStream purify_stream(const ExperimentConfig& cfg, std::size_t index);

struct SampleRecord {
  std::size_t index = 0;
  std::size_t label = 0;
  std::size_t bare_clean_pred = 0;     // classifier on x
  std::size_t bare_attacked_pred = 0;  // classifier on x'
  std::size_t clean_pred = 0;          // ADP ensemble on x
  std::size_t purified_pred = 0;       // ADP ensemble on x'
  bool attack_success = false;
  std::size_t queries = 0;
  double perturbation = 0.0;  // |x' - x| in the threat norm
  double score_norm_clean = 0.0;
  double score_norm_attacked = 0.0;
};

struct EvaluationReport {
  std::string dataset;
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  nlohmann::ordered_json attack;  // resolved attack settings
  nlohmann::ordered_json purify;  // resolved purification settings
  nlohmann::ordered_json seeds;
  double clean_accuracy = 0.0;
  double robust_accuracy = 0.0;
  double bare_clean_accuracy = 0.0;
  double bare_robust_accuracy = 0.0;
  std::vector<SampleRecord> records;
  std::optional<double> wall_time_seconds;  // only when eval.record_wall_time

  // Key set depends only on the config shape, never on results.
  nlohmann::ordered_json to_json() const;
};

EvaluationReport run_evaluation(const ExperimentConfig& cfg);
EvaluationReport run_evaluation(const ExperimentConfig& cfg, const Pipeline& p);

struct CertificationResult {
  std::vector<CertifiedPoint> points;
  std::vector<CurvePoint> curve;
  nlohmann::ordered_json to_json() const;
};

CertificationResult run_certification(const ExperimentConfig& cfg, const Pipeline& p);

struct DetectionResult {
  double threshold = 0.0;
  std::vector<double> natural_norms;
  std::vector<double> attacked_norms;
  std::vector<Verdict> natural_verdicts;
  std::vector<Verdict> attacked_verdicts;
  double auc = 0.0;
  double true_positive_rate = 0.0;   // attacked flagged
  double false_positive_rate = 0.0;  // natural flagged
  Histogram histogram;
  nlohmann::ordered_json to_json() const;
};

// Natural inputs vs their attacked versions; the threshold is calibrated on
// the training split's natural norms unless detect.calibrate is false.
DetectionResult run_detection(const ExperimentConfig& cfg, const Pipeline& p, const Matrix& natural,
                              const Matrix& attacked);

double calibrate_on(const ExperimentConfig& cfg, const Pipeline& p, const Matrix& natural);

void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const nlohmann::ordered_json& j);
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve);
void write_histogram_csv(const std::string& path, const Histogram& h);

std::string curve_csv(const std::vector<CurvePoint>& curve);
std::string histogram_csv(const Histogram& h);

}  // namespace adp

#endif  // ADP_HARNESS_HPP
