#include "adp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include "adp/errors.hpp"

namespace adp {

using nlohmann::ordered_json;

namespace {

std::uint64_t indexed_seed(std::uint64_t master, SeedPurpose purpose, std::size_t index) {
  return RngStream(derive_seed(master, purpose)).derive(index).next_u64();
}

double threat_distance(std::span<const double> a, std::span<const double> b, NormKind norm) {
  return norm == NormKind::Linf ? linf_distance(a, b) : l2_distance(a, b);
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ordered_json nullable(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json purify_json(const PurifyConfig& p, bool median) {
  return {{"lambda", p.lambda},
          {"delta", p.delta},
          {"sigma", p.sigma},
          {"sigma_rule", median ? "median_heuristic" : "fixed"},
          {"runs", p.runs},
          {"steps", p.max_steps},
          {"tau_stop", p.tau_stop},
          {"stop_rule", to_string(p.stop_rule)},
          {"ensemble", to_string(p.ensemble)},
          {"box", {{"enabled", p.box.enabled}, {"lo", p.box.lo}, {"hi", p.box.hi}}}};
}

MlpSpec network_spec(const NetworkSection& cfg, std::size_t in, std::size_t out) {
  MlpSpec spec;
  spec.dims.push_back(in);
  for (std::size_t w : cfg.hidden) spec.dims.push_back(w);
  spec.dims.push_back(out);
  spec.activation = cfg.activation;
  return spec;
}

Checkpoint load_model(const std::string& path, ModelKind kind, std::size_t in, std::size_t out, const char* field) {
  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(path);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
  if (ckpt.kind != kind) throw ConfigError(field, path + " holds the wrong model kind");
  const MlpSpec& spec = ckpt.model.spec();
  if (spec.input_dim() != in || spec.output_dim() != out)
    throw ConfigError(field, path + " has shape " + std::to_string(spec.input_dim()) + "->" +
                                 std::to_string(spec.output_dim()) + ", data needs " + std::to_string(in) + "->" +
                                 std::to_string(out));
  return ckpt;
}

}  // namespace

std::size_t worker_count(std::size_t requested) {
  if (const char* env = std::getenv("ADP_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw ConfigError("ADP_THREADS", std::string("expected a positive integer, got '") + env + "'");
    return requested ? std::min(requested, static_cast<std::size_t>(cap)) : static_cast<std::size_t>(cap);
  }
  return requested ? requested : std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, n); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t derive_seed(std::uint64_t master, SeedPurpose purpose) {
  return RngStream(master, static_cast<std::uint64_t>(purpose)).next_u64();
}

Dataset load_data(const DataSection& cfg) {
  Dataset ds;
  if (cfg.source == "synthetic") {
    ds = gen_synthetic(cfg.classes, cfg.dim, cfg.n_per_blob, cfg.separation, cfg.noise_std, cfg.seed);
  } else if (cfg.source == "file") {
    ds = load_dataset(cfg.path);
  } else if (cfg.source == "idx") {
    ds = load_idx(cfg.images, cfg.labels, cfg.normalize);
    ds.seed = cfg.seed;
  } else {
    throw ConfigError("data.source", "unknown source '" + cfg.source + "'");
  }
  return ds;
}

DatasetSplit split_data(const Dataset& ds, const DataSection& cfg) {
  return split_dataset(ds, cfg.test_fraction, ds.seed);
}

double class_mean_gap(const Dataset& ds) {
  Matrix means(ds.classes, ds.dim());
  std::vector<std::size_t> counts(ds.classes, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.features.row(i);
    auto m = means.row(ds.labels[i]);
    for (std::size_t d = 0; d < row.size(); ++d) m[d] += row[d];
    ++counts[ds.labels[i]];
  }
  std::vector<std::size_t> present;
  for (std::size_t k = 0; k < ds.classes; ++k) {
    if (counts[k] == 0) continue;
    for (double& v : means.row(k)) v /= static_cast<double>(counts[k]);
    present.push_back(k);
  }
  if (present.size() < 2) throw InsufficientData("class_mean_gap: need at least two populated classes");
  double gap = INFINITY;
  for (std::size_t a = 0; a < present.size(); ++a)
    for (std::size_t b = a + 1; b < present.size(); ++b)
      gap = std::min(gap, l2_distance(means.row(present[a]), means.row(present[b])));
  return gap;
}

Checkpoint train_classifier_checkpoint(const NetworkSection& cfg, const Dataset& train, std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.lr = cfg.lr;
  tc.seed = seed;
  TrainResult res = train_classifier(network_spec(cfg, train.dim(), train.classes), train.features, train.labels, tc);
  Checkpoint ckpt;
  ckpt.kind = ModelKind::Classifier;
  ckpt.metadata = {{"seed", seed},
                   {"epochs", cfg.epochs},
                   {"batch_size", cfg.batch_size},
                   {"lr", cfg.lr},
                   {"dataset", train.name},
                   {"train_rows", train.size()},
                   {"train_accuracy", classifier_accuracy(res.model, train.features, train.labels)},
                   {"holdout_initial", res.holdout_initial},
                   {"holdout_final", res.holdout_final}};
  ckpt.model = std::move(res.model);
  return ckpt;
}

Checkpoint train_score_checkpoint(const ScoreSection& cfg, const Dataset& train, std::uint64_t seed) {
  double sigma1 = cfg.sigma_max ? *cfg.sigma_max : sigma1_from_data(train.features);
  if (!(sigma1 > 0.0)) throw InsufficientData("train-score: training rows are identical, no noise scale");
  sigma1 = std::max(sigma1, cfg.sigma_min);
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.lr = cfg.lr;
  tc.seed = seed;
  tc.schedule = make_noise_schedule(sigma1, cfg.sigma_min, cfg.levels);
  TrainResult res = train_score(network_spec(cfg, train.dim(), train.dim()), train.features, tc);
  Checkpoint ckpt;
  ckpt.kind = ModelKind::Score;
  ckpt.metadata = {{"seed", seed},
                   {"epochs", cfg.epochs},
                   {"batch_size", cfg.batch_size},
                   {"lr", cfg.lr},
                   {"schedule", tc.schedule.levels},
                   {"dataset", train.name},
                   {"train_rows", train.size()},
                   {"holdout_initial", res.holdout_initial},
                   {"holdout_final", res.holdout_final}};
  ckpt.model = std::move(res.model);
  return ckpt;
}

double checkpoint_sigma_min(const Checkpoint& ckpt) {
  const auto it = ckpt.metadata.find("schedule");
  if (it == ckpt.metadata.end() || !it->is_array() || it->empty() || !it->back().is_number())
    throw FormatError("score checkpoint metadata lacks a noise schedule");
  const double s = it->back().get<double>();
  if (!(s > 0.0)) throw FormatError("score checkpoint has a non-positive finest noise level");
  return s;
}

void resolve_pipeline(const ExperimentConfig& cfg, Pipeline& p) {
  p.sigma_min = checkpoint_sigma_min(p.score_model);
  p.purify = cfg.purify.config;
  if (!p.purify.box.enabled && p.train.box.enabled) p.purify.box = p.train.box;
  if (cfg.purify.median_sigma) p.purify.sigma = median_heuristic_sigma(p.train.features);
  p.purify.validate();
  p.class_gap = class_mean_gap(p.train);
  p.threat.norm = cfg.attack.norm;
  p.threat.epsilon = cfg.attack.gap_fraction ? *cfg.attack.gap_fraction * p.class_gap : cfg.attack.epsilon;
}

Pipeline build_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  Pipeline p;
  DatasetSplit split = split_data(load_data(cfg.data), cfg.data);
  p.train = std::move(split.train);
  p.test = std::move(split.test);
  if (p.train.size() < 2) throw ConfigError("data", "training split has fewer than 2 rows");
  if (p.test.size() < 1) throw ConfigError("data.test_fraction", "test split is empty");
  const std::size_t dim = p.train.dim();
  if (!cfg.classifier.checkpoint.empty())
    p.classifier = load_model(cfg.classifier.checkpoint, ModelKind::Classifier, dim, p.train.classes,
                              "classifier.checkpoint");
  else
    p.classifier = train_classifier_checkpoint(cfg.classifier, p.train, derive_seed(cfg.eval.seed, SeedPurpose::Classifier));
  if (!cfg.score.checkpoint.empty())
    p.score_model = load_model(cfg.score.checkpoint, ModelKind::Score, dim, dim, "score.checkpoint");
  else
    p.score_model = train_score_checkpoint(cfg.score, p.train, derive_seed(cfg.eval.seed, SeedPurpose::Score));
  resolve_pipeline(cfg, p);
  return p;
}

RngStream purify_stream(const ExperimentConfig& cfg, std::size_t index) {
  return RngStream(derive_seed(cfg.eval.seed, SeedPurpose::Purify)).derive(index);
}

Purifier adp_purifier(const Pipeline& p, std::optional<Vector> fixed_steps) {
  ScoreFn score = p.score();
  PurifyConfig purify = p.purify;
  return [score, purify, fixed = std::move(fixed_steps)](std::span<const double> v, RngStream& rng) {
    if (fixed) return noisy_purify_run(score, v, purify, rng, std::span<const double>(*fixed));
    return noisy_purify_run(score, v, purify, rng);
  };
}

AttackResult run_attack(const ExperimentConfig& cfg, const Pipeline& p, std::span<const double> x, std::size_t y,
                        std::size_t index) {
  const AttackSection& a = cfg.attack;
  AttackConfig ac;
  ac.threat = p.threat;
  ac.steps = a.steps;
  ac.step_size = a.step_size;
  ac.eot_samples = a.eot_samples;
  ac.eot_sigma = a.eot_sigma;
  ac.joint_weight = a.joint_weight;
  ac.spsa_queries = a.spsa_queries;
  ac.spsa_perturb = a.spsa_perturb;
  ac.seed = indexed_seed(cfg.eval.seed, SeedPurpose::Attack, index);
  ac.box = p.purify.box;

  const MlpModel& clf = p.clf();
  const ScoreFn score = p.score();
  auto defender_steps = [&] {
    PurifyConfig det = p.purify;
    det.sigma = 0.0;
    return deterministic_purify(score, x, det).step_sizes;
  };

  if (a.name == "none") {
    AttackResult r;
    r.adversarial.assign(x.begin(), x.end());
    r.success = predict_label(clf, x) != y;
    return r;
  }
  if (a.name == "pgd") return pgd(clf, x, y, ac);
  if (a.name == "joint_score") return joint_score_attack(clf, score, x, y, ac);
  if (a.name == "unroll") {
    if (a.unroll_step) {
      ac.unroll_step = *a.unroll_step;
    } else {
      const Vector steps = defender_steps();
      ac.unroll_step = steps.empty() ? 0.0 : steps.front();
    }
    return one_step_unrolling_attack(clf, score, x, y, ac);
  }

  std::optional<Vector> fixed;
  if (a.known_step_sizes) fixed = defender_steps();
  const Purifier purifier = adp_purifier(p, fixed);
  if (a.name == "bpda") return bpda(purifier, clf, x, y, ac);
  if (a.name == "joint_full") return joint_full_attack(clf, purifier, x, y, ac);
  if (a.name == "approximate_input") return approximate_input_attack(clf, purifier, x, y, ac);
  if (a.name == "spsa") {
    const LossFn loss = [&](std::span<const double> v) {
      RngStream rng(ac.seed, 21);
      return softmax_cross_entropy(mlp_forward(clf, purifier(v, rng)), y).loss;
    };
    const auto label = [&](std::span<const double> v) {
      return ensemble_predict(score, clf, v, p.purify, RngStream(ac.seed, 22)).label;
    };
    return spsa_attack(loss, label, x, y, ac);
  }
  throw ConfigError("attack.name", "unknown attack '" + a.name + "'");
}

EvaluationReport run_evaluation(const ExperimentConfig& cfg) { return run_evaluation(cfg, build_pipeline(cfg)); }

EvaluationReport run_evaluation(const ExperimentConfig& cfg, const Pipeline& p) {
  const auto start = std::chrono::steady_clock::now();
  EvaluationReport rep;
  rep.dataset = p.test.name;
  rep.dim = p.test.dim();
  rep.classes = p.test.classes;
  rep.train_size = p.train.size();
  rep.test_size = p.test.size();

  const AttackSection& a = cfg.attack;
  rep.attack = {{"name", a.name},
                {"norm", to_string(p.threat.norm)},
                {"epsilon", p.threat.epsilon},
                {"gap_fraction", nullable(a.gap_fraction)},
                {"class_mean_gap", p.class_gap},
                {"steps", a.steps},
                {"step_size", a.step_size},
                {"eot_samples", a.eot_samples},
                {"eot_sigma", a.eot_sigma},
                {"joint_weight", a.joint_weight},
                {"spsa_queries", a.spsa_queries},
                {"spsa_perturb", a.spsa_perturb},
                {"unroll_step", nullable(a.unroll_step)},
                {"known_step_sizes", a.known_step_sizes}};
  rep.purify = purify_json(p.purify, cfg.purify.median_sigma);
  rep.purify["score_sigma"] = p.sigma_min;
  rep.seeds = {{"master", cfg.eval.seed},
               {"data", p.test.seed},
               {"classifier", p.classifier.metadata.value("seed", std::uint64_t{0})},
               {"score", p.score_model.metadata.value("seed", std::uint64_t{0})},
               {"attack", derive_seed(cfg.eval.seed, SeedPurpose::Attack)},
               {"purify", derive_seed(cfg.eval.seed, SeedPurpose::Purify)}};

  const std::size_t n = std::min(cfg.eval.max_samples, p.test.size());
  rep.records.resize(n);
  const ScoreFn score = p.score();
  const MlpModel& clf = p.clf();
  parallel_for(n, worker_count(cfg.eval.threads), [&](std::size_t i) {
    const auto x = p.test.features.row(i);
    const std::size_t y = p.test.labels[i];
    const AttackResult atk = run_attack(cfg, p, x, y, i);
    const RngStream stream = purify_stream(cfg, i);
    SampleRecord& r = rep.records[i];
    r.index = i;
    r.label = y;
    r.bare_clean_pred = predict_label(clf, x);
    r.bare_attacked_pred = predict_label(clf, atk.adversarial);
    r.clean_pred = ensemble_predict(score, clf, x, p.purify, stream).label;
    r.purified_pred = ensemble_predict(score, clf, atk.adversarial, p.purify, stream).label;
    r.attack_success = atk.success;
    r.queries = atk.queries;
    r.perturbation = threat_distance(atk.adversarial, x, p.threat.norm);
    r.score_norm_clean = score_norm(score, x);
    r.score_norm_attacked = score_norm(score, atk.adversarial);
  });

  std::size_t clean = 0, robust = 0, bare_clean = 0, bare_robust = 0;
  for (const auto& r : rep.records) {
    clean += r.clean_pred == r.label;
    robust += r.purified_pred == r.label;
    bare_clean += r.bare_clean_pred == r.label;
    bare_robust += r.bare_attacked_pred == r.label;
  }
  const double denom = static_cast<double>(std::max<std::size_t>(n, 1));
  rep.clean_accuracy = static_cast<double>(clean) / denom;
  rep.robust_accuracy = static_cast<double>(robust) / denom;
  rep.bare_clean_accuracy = static_cast<double>(bare_clean) / denom;
  rep.bare_robust_accuracy = static_cast<double>(bare_robust) / denom;
  if (cfg.eval.record_wall_time)
    rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

ordered_json EvaluationReport::to_json() const {
  ordered_json j;
  j["dataset"] = {{"name", dataset},
                  {"dim", dim},
                  {"classes", classes},
                  {"train_size", train_size},
                  {"test_size", test_size},
                  {"evaluated", records.size()}};
  j["attack"] = attack;
  j["purify"] = purify;
  j["seeds"] = seeds;
  j["clean_accuracy"] = clean_accuracy;
  j["robust_accuracy"] = robust_accuracy;
  j["bare_clean_accuracy"] = bare_clean_accuracy;
  j["bare_robust_accuracy"] = bare_robust_accuracy;
  ordered_json recs = ordered_json::array();
  for (const auto& r : records)
    recs.push_back({{"index", r.index},
                    {"label", r.label},
                    {"bare_clean_pred", r.bare_clean_pred},
                    {"bare_attacked_pred", r.bare_attacked_pred},
                    {"clean_pred", r.clean_pred},
                    {"purified_pred", r.purified_pred},
                    {"attack_success", r.attack_success},
                    {"queries", r.queries},
                    {"perturbation", r.perturbation},
                    {"score_norm_clean", r.score_norm_clean},
                    {"score_norm_attacked", r.score_norm_attacked}});
  j["records"] = std::move(recs);
  j["wall_time_seconds"] = nullable(wall_time_seconds);
  return j;
}

CertificationResult run_certification(const ExperimentConfig& cfg, const Pipeline& p) {
  const CertifySection& c = cfg.certify;
  const std::size_t n = std::min(c.max_samples, p.test.size());
  const ScoreFn score = p.score();
  const MlpModel& clf = p.clf();
  const RngStream root(derive_seed(cfg.eval.seed, SeedPurpose::Certify));
  CertificationResult out;
  out.points.resize(n);
  parallel_for(n, worker_count(cfg.eval.threads), [&](std::size_t i) {
    const RngStream defender = purify_stream(cfg, i);
    const LabelFn pipeline = [&](std::span<const double> v) {
      if (!c.purify) return predict_label(clf, v);
      return ensemble_predict(score, clf, v, p.purify, defender).label;
    };
    out.points[i] = certify_point(pipeline, p.test.features.row(i), p.test.labels[i], i, c.sigma, c.samples,
                                  root.derive(i), c.options);
  });
  out.curve = accuracy_curve(out.points, c.radii);
  return out;
}

ordered_json CertificationResult::to_json() const {
  ordered_json j;
  ordered_json pts = ordered_json::array();
  for (const auto& pt : points)
    pts.push_back({{"index", pt.index},
                   {"predicted", pt.predicted},
                   {"correct", pt.correct},
                   {"radius", nullable(pt.radius)}});
  ordered_json cur = ordered_json::array();
  for (const auto& c : curve) cur.push_back({{"radius", c.radius}, {"certified_accuracy", c.certified_accuracy}});
  j["points"] = std::move(pts);
  j["curve"] = std::move(cur);
  return j;
}

double calibrate_on(const ExperimentConfig& cfg, const Pipeline& p, const Matrix& natural) {
  const ScoreFn score = p.score();
  std::vector<double> norms(natural.rows);
  parallel_for(natural.rows, worker_count(cfg.eval.threads),
               [&](std::size_t i) { norms[i] = score_norm(score, natural.row(i)); });
  return calibrate_threshold(std::move(norms), cfg.detect.quantile);
}

DetectionResult run_detection(const ExperimentConfig& cfg, const Pipeline& p, const Matrix& natural,
                              const Matrix& attacked) {
  if (natural.rows == 0 || attacked.rows == 0) throw InsufficientData("detect: both sets must be non-empty");
  DetectionResult out;
  out.threshold = cfg.detect.calibrate ? calibrate_on(cfg, p, p.train.features) : cfg.detect.config.s_th;
  DetectConfig dc = cfg.detect.config;
  dc.s_th = out.threshold;
  const ScoreFn score = p.score();
  const std::size_t workers = worker_count(cfg.eval.threads);
  out.natural_norms.resize(natural.rows);
  out.attacked_norms.resize(attacked.rows);
  parallel_for(natural.rows, workers, [&](std::size_t i) { out.natural_norms[i] = score_norm(score, natural.row(i)); });
  parallel_for(attacked.rows, workers,
               [&](std::size_t i) { out.attacked_norms[i] = score_norm(score, attacked.row(i)); });
  auto verdict = [&](double norm) { return norm > dc.s_th ? Verdict::Attacked : Verdict::Natural; };
  std::size_t tp = 0, fp = 0;
  for (double v : out.natural_norms) {
    out.natural_verdicts.push_back(verdict(v));
    fp += out.natural_verdicts.back() == Verdict::Attacked;
  }
  for (double v : out.attacked_norms) {
    out.attacked_verdicts.push_back(verdict(v));
    tp += out.attacked_verdicts.back() == Verdict::Attacked;
  }
  out.true_positive_rate = static_cast<double>(tp) / static_cast<double>(attacked.rows);
  out.false_positive_rate = static_cast<double>(fp) / static_cast<double>(natural.rows);
  out.auc = detection_auc(out.natural_norms, out.attacked_norms);

  // Purified set: the first ADP run of each attacked input.
  std::vector<double> purified_norms(attacked.rows);
  parallel_for(attacked.rows, workers, [&](std::size_t i) {
    RngStream rng = purify_stream(cfg, i).derive(0);
    purified_norms[i] = score_norm(score, noisy_purify_run(score, attacked.row(i), p.purify, rng));
  });
  out.histogram = histogram({{"natural", out.natural_norms}, {"attacked", out.attacked_norms},
                             {"purified", purified_norms}},
                            cfg.detect.bins);
  return out;
}

ordered_json DetectionResult::to_json() const {
  ordered_json j;
  j["threshold"] = threshold;
  j["auc"] = auc;
  j["true_positive_rate"] = true_positive_rate;
  j["false_positive_rate"] = false_positive_rate;
  auto sorted_median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
  };
  j["median_natural_norm"] = sorted_median(natural_norms);
  j["median_attacked_norm"] = sorted_median(attacked_norms);
  auto set_json = [](const std::vector<double>& norms, const std::vector<Verdict>& verdicts) {
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < norms.size(); ++i)
      arr.push_back({{"index", i}, {"score_norm", norms[i]}, {"verdict", to_string(verdicts[i])}});
    return arr;
  };
  j["natural"] = set_json(natural_norms, natural_verdicts);
  j["attacked"] = set_json(attacked_norms, attacked_verdicts);
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

void write_json(const std::string& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string s = "radius,certified_accuracy\n";
  for (const auto& c : curve) s += fmt(c.radius) + "," + fmt(c.certified_accuracy) + "\n";
  return s;
}

std::string histogram_csv(const Histogram& h) {
  std::string s = "set,bin_lo,bin_hi,count\n";
  for (std::size_t k = 0; k < h.sets.size(); ++k)
    for (std::size_t b = 0; b + 1 < h.edges.size(); ++b)
      s += h.sets[k] + "," + fmt(h.edges[b]) + "," + fmt(h.edges[b + 1]) + "," + std::to_string(h.counts[k][b]) + "\n";
  return s;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) { write_text(path, curve_csv(curve)); }

void write_histogram_csv(const std::string& path, const Histogram& h) { write_text(path, histogram_csv(h)); }

}  // namespace adp
