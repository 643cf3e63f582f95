#ifndef ADP_CONFIG_HPP
#define ADP_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/attacks.hpp"
#include "adp/certify.hpp"
#include "adp/detect.hpp"
#include "adp/models.hpp"
#include "adp/purify.hpp"

namespace adp {

struct DataSection {
  std::string source = "synthetic";  // synthetic | file | idx
  std::string path;                  // dataset file (source = file)
  std::string images;                // idx image file
  std::string labels;                // idx label file
  bool normalize = true;
  std::size_t classes = 4;
  std::size_t dim = 64;
  std::size_t n_per_blob = 200;
  double separation = 1.0;
  double noise_std = 0.02;
  std::uint64_t seed = 1;
  double test_fraction = 0.25;
};

struct NetworkSection {
  std::vector<std::size_t> hidden;
  Activation activation = Activation::Tanh;
  std::size_t epochs = 0;
  std::size_t batch_size = 32;
  double lr = 0.001;
  std::string checkpoint;  // load instead of training when set
};

struct ScoreSection : NetworkSection {
  std::size_t levels = 10;
  double sigma_min = 0.01;
  std::optional<double> sigma_max;  // empty: largest pairwise distance of the training data
};

struct AttackSection {
  std::string name = "pgd";  // none | pgd | bpda | spsa | joint_score | joint_full | approximate_input | unroll
  NormKind norm = NormKind::L2;
  double epsilon = 8.0 / 255.0;
  std::optional<double> gap_fraction;  // epsilon = fraction * smallest distance between training class means
  std::size_t steps = 40;
  double step_size = 0.0;
  std::size_t eot_samples = 1;
  double eot_sigma = 0.0;
  double joint_weight = 0.5;
  std::size_t spsa_queries = 1280;
  double spsa_perturb = 0.01;
  std::optional<double> unroll_step;  // empty: the defender's first adaptive step at the clean input
  bool known_step_sizes = false;
};

struct PurifySection {
  PurifyConfig config;
  bool median_sigma = true;  // config.sigma from the median heuristic on the training data
};

struct EvalSection {
  std::size_t max_samples = 200;
  std::uint64_t seed = 0;  // master seed
  std::size_t threads = 0;  // 0: ADP_THREADS or hardware concurrency
  bool record_wall_time = false;
};

struct DetectSection {
  DetectConfig config;
  bool calibrate = true;  // s_th from the natural held-out norms
  double quantile = 0.95;
  std::size_t bins = 20;
};

struct CertifySection {
  double sigma = 0.25;
  std::size_t samples = 100;
  std::vector<double> radii = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
  CertifyOptions options;
  bool purify = true;  // smooth the ADP pipeline (false: the bare classifier)
  std::size_t max_samples = 50;
};

struct ExperimentConfig {
  DataSection data;
  NetworkSection classifier;
  ScoreSection score;
  AttackSection attack;
  PurifySection purify;
  EvalSection eval;
  DetectSection detect;
  CertifySection certify;

  ExperimentConfig();

  // Unknown keys, wrong types and out-of-range values throw ConfigError
  // naming the field path, e.g. "attack.epsilon".
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

ExperimentConfig load_config(const std::string& path);

// Sets a dotted path ("purify.runs") inside a JSON object, creating objects.
void set_json_path(nlohmann::json& root, const std::string& dotted, nlohmann::json value);

const char* to_string(NormKind n);
const char* to_string(StopRule r);
const char* to_string(EnsembleMode m);
const char* to_string(Activation a);
const char* to_string(CertifyMode m);

}  // namespace adp

#endif  // ADP_CONFIG_HPP
