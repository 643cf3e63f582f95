#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <memory>

#include "adp/errors.hpp"
#include "adp/harness.hpp"

namespace adp::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Command-line value as JSON: numbers, booleans and null parse as such,
// anything else is a string.
json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

// A flag that overrides one field of the JSON config.
struct Override {
  std::string flag;
  std::string path;
  CLI::Option* option = nullptr;
  std::string value;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::unique_ptr<Override>> overrides;
  std::map<std::string, std::string> paths;  // non-config file flags
  std::map<std::string, CLI::Option*> path_options;
  bool dual_noise = false;

  void map(const std::string& flag, const std::string& path, const std::string& help) {
    auto o = std::make_unique<Override>();
    o->flag = flag;
    o->path = path;
    o->option = app->add_option(flag, o->value, help + " (" + path + ")");
    overrides.push_back(std::move(o));
  }

  void file(const std::string& flag, const std::string& help, bool required = false) {
    auto* opt = app->add_option(flag, paths[flag], help);
    if (required) opt->required();
    path_options[flag] = opt;
  }

  bool has(const std::string& flag) const { return path_options.at(flag)->count() > 0; }
  const std::string& path(const std::string& flag) const { return paths.at(flag); }

  // Config file, then --set assignments, then dedicated flags.
  ExperimentConfig config() const {
    json j = config_path.empty() ? json::object() : read_config();
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected path=value, got '" + s + "'");
      assign(j, s.substr(0, eq), parse_value(s.substr(eq + 1)));
    }
    for (const auto& o : overrides)
      if (o->option->count() > 0) assign(j, o->path, parse_value(o->value));
    if (auto it = path_options.find("--data"); it != path_options.end() && it->second->count() > 0) {
      set_json_path(j, "data.source", "file");
      set_json_path(j, "data.path", paths.at("--data"));
    }
    try {
      ExperimentConfig cfg = ExperimentConfig::from_json(j);
      cfg.validate();
      return cfg;
    } catch (const ConfigError& e) {
      // Point at the flag when one supplied the offending value.
      for (const auto& o : overrides)
        if (o->option->count() > 0 && o->path == e.field()) throw ConfigError(o->flag, e.what());
      throw;
    }
  }

 private:
  json read_config() const {
    std::ifstream in(config_path);
    if (!in) throw ConfigError(config_path, "cannot open config file");
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(config_path, std::string("invalid JSON: ") + e.what());
    }
  }

  // An explicit epsilon replaces the class-gap rule.
  static void assign(json& j, const std::string& path, json value) {
    if (path == "attack.epsilon") set_json_path(j, "attack.gap_fraction", nullptr);
    set_json_path(j, path, std::move(value));
  }
};

void add_common(Command& c, bool data_seed) {
  c.app->add_option("--config", c.config_path, "JSON experiment config");
  c.app->add_option("--set", c.sets, "Override any config field: dotted.path=value (repeatable)");
  c.map("--seed", data_seed ? "data.seed" : "eval.seed", data_seed ? "Dataset seed" : "Master seed");
  c.map("--threads", "eval.threads", "Worker threads (also bounded by ADP_THREADS)");
}

void add_models(Command& c) {
  c.file("--data", "Dataset file to use instead of the configured source");
  c.map("--classifier", "classifier.checkpoint", "Classifier checkpoint");
  c.map("--score", "score.checkpoint", "Score network checkpoint");
}

void add_attack(Command& c) {
  c.map("--attack", "attack.name", "Attack name");
  c.map("--epsilon", "attack.epsilon", "Threat radius");
  c.map("--norm", "attack.norm", "Threat norm: l2 or linf");
  c.map("--max-samples", "eval.max_samples", "Number of test samples");
}

void emit(const ordered_json& j, const Command& c, const std::string& flag, std::ostream& out) {
  if (c.has(flag))
    write_json(c.path(flag), j);
  else
    out << j.dump(2) << "\n";
}

std::size_t sample_count(const ExperimentConfig& cfg, const Dataset& ds) {
  return std::min(cfg.eval.max_samples, ds.size());
}

Dataset head(const Dataset& ds, std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return subset(ds, rows);
}

Dataset read_input(const Command& c, const std::string& flag, const Pipeline& p, const Dataset& fallback) {
  if (!c.has(flag)) return fallback;
  Dataset ds = load_dataset(c.path(flag));
  if (ds.dim() != p.train.dim())
    throw ConfigError(flag, c.path(flag) + " has dimension " + std::to_string(ds.dim()) + ", models expect " +
                                std::to_string(p.train.dim()));
  for (std::size_t y : ds.labels)
    if (y >= p.train.classes) throw ConfigError(flag, c.path(flag) + " has a label outside the classifier's range");
  return ds;
}

struct AttackOutcome {
  Dataset adversarial;
  std::vector<AttackResult> results;
};

AttackOutcome attack_rows(const ExperimentConfig& cfg, const Pipeline& p, const Dataset& natural) {
  AttackOutcome o;
  o.adversarial = natural;
  o.adversarial.name = natural.name + "-" + cfg.attack.name;
  o.adversarial.seed = cfg.eval.seed;
  o.results.resize(natural.size());
  parallel_for(natural.size(), worker_count(cfg.eval.threads), [&](std::size_t i) {
    o.results[i] = run_attack(cfg, p, natural.features.row(i), natural.labels[i], i);
    std::copy(o.results[i].adversarial.begin(), o.results[i].adversarial.end(), o.adversarial.features.row(i).begin());
  });
  return o;
}

int gen_data(const Command& c, std::ostream& out) {
  const ExperimentConfig cfg = c.config();
  const Dataset ds = load_data(cfg.data);
  save_dataset(ds, c.path("--out"));
  out << ordered_json{{"out", c.path("--out")}, {"rows", ds.size()}, {"dim", ds.dim()}, {"classes", ds.classes},
                      {"seed", ds.seed}}
             .dump()
      << "\n";
  return Ok;
}

int train_model(const Command& c, std::ostream& out, bool score) {
  const ExperimentConfig cfg = c.config();
  const DatasetSplit split = split_data(load_data(cfg.data), cfg.data);
  const Checkpoint ckpt = score ? train_score_checkpoint(cfg.score, split.train, derive_seed(cfg.eval.seed, SeedPurpose::Score))
                                : train_classifier_checkpoint(cfg.classifier, split.train,
                                                              derive_seed(cfg.eval.seed, SeedPurpose::Classifier));
  save_checkpoint(ckpt, c.path("--out"));
  ordered_json summary = {{"out", c.path("--out")}, {"kind", score ? "score" : "classifier"}};
  summary["metadata"] = ordered_json::parse(ckpt.metadata.dump());
  if (!score) summary["test_accuracy"] = classifier_accuracy(ckpt.model, split.test.features, split.test.labels);
  out << summary.dump(2) << "\n";
  return Ok;
}

int attack(const Command& c, std::ostream& out) {
  const ExperimentConfig cfg = c.config();
  const Pipeline p = build_pipeline(cfg);
  const Dataset natural = head(p.test, sample_count(cfg, p.test));
  const AttackOutcome o = attack_rows(cfg, p, natural);
  if (c.has("--adversarial-out")) save_dataset(o.adversarial, c.path("--adversarial-out"));
  std::size_t clean_ok = 0, attacked_ok = 0;
  ordered_json records = ordered_json::array();
  for (std::size_t i = 0; i < natural.size(); ++i) {
    const auto x = natural.features.row(i);
    const std::size_t y = natural.labels[i];
    const std::size_t before = predict_label(p.clf(), x);
    const std::size_t after = predict_label(p.clf(), o.results[i].adversarial);
    clean_ok += before == y;
    attacked_ok += after == y;
    const double dist = p.threat.norm == NormKind::Linf ? linf_distance(o.results[i].adversarial, x)
                                                        : l2_distance(o.results[i].adversarial, x);
    records.push_back({{"index", i},
                       {"label", y},
                       {"clean_pred", before},
                       {"attacked_pred", after},
                       {"attack_success", o.results[i].success},
                       {"queries", o.results[i].queries},
                       {"perturbation", dist}});
  }
  const double n = static_cast<double>(std::max<std::size_t>(natural.size(), 1));
  ordered_json rep = {{"attack", cfg.attack.name},
                      {"norm", to_string(p.threat.norm)},
                      {"epsilon", p.threat.epsilon},
                      {"samples", natural.size()},
                      {"bare_clean_accuracy", clean_ok / n},
                      {"bare_attacked_accuracy", attacked_ok / n},
                      {"records", std::move(records)}};
  emit(rep, c, "--out", out);
  return Ok;
}

int purify(const Command& c, std::ostream& out) {
  const ExperimentConfig cfg = c.config();
  const Pipeline p = build_pipeline(cfg);
  const Dataset input = read_input(c, "--input", p, head(p.test, sample_count(cfg, p.test)));
  const std::size_t n = std::min(cfg.eval.max_samples, input.size());
  const ScoreFn score = p.score();
  DetectConfig dc = cfg.detect.config;
  dc.base_sigma = p.purify.sigma;
  if (c.dual_noise && cfg.detect.calibrate) dc.s_th = calibrate_on(cfg, p, p.train.features);

  Dataset purified = head(input, n);
  purified.name = input.name + "-purified";
  std::vector<std::size_t> preds(n);
  std::vector<Verdict> verdicts(n, Verdict::Natural);
  std::vector<double> used_sigma(n, p.purify.sigma);
  parallel_for(n, worker_count(cfg.eval.threads), [&](std::size_t i) {
    const auto x = input.features.row(i);
    const RngStream stream = purify_stream(cfg, i);
    if (c.dual_noise) {
      const DualNoiseResult r = dual_noise_purify(score, p.clf(), x, p.purify, dc, stream);
      preds[i] = r.prediction.label;
      verdicts[i] = r.verdict;
      used_sigma[i] = r.sigma_used;
    } else {
      preds[i] = ensemble_predict(score, p.clf(), x, p.purify, stream).label;
    }
    PurifyConfig run_cfg = p.purify;
    run_cfg.sigma = used_sigma[i];
    RngStream rng = stream.derive(0);
    const Vector v = noisy_purify_run(score, x, run_cfg, rng);
    std::copy(v.begin(), v.end(), purified.features.row(i).begin());
  });
  if (c.has("--purified-out")) save_dataset(purified, c.path("--purified-out"));

  std::size_t correct = 0;
  ordered_json records = ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    correct += preds[i] == input.labels[i];
    ordered_json r = {{"index", i},
                      {"label", input.labels[i]},
                      {"purified_pred", preds[i]},
                      {"sigma", used_sigma[i]},
                      {"score_norm_input", score_norm(score, input.features.row(i))},
                      {"score_norm_purified", score_norm(score, purified.features.row(i))}};
    if (c.dual_noise) r["verdict"] = to_string(verdicts[i]);
    records.push_back(std::move(r));
  }
  ordered_json rep = {{"input", input.name},
                      {"samples", n},
                      {"sigma", p.purify.sigma},
                      {"runs", p.purify.runs},
                      {"steps", p.purify.max_steps},
                      {"dual_noise", c.dual_noise},
                      {"threshold", c.dual_noise ? ordered_json(dc.s_th) : ordered_json(nullptr)},
                      {"accuracy", n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0},
                      {"records", std::move(records)}};
  emit(rep, c, "--out", out);
  return Ok;
}

int evaluate(const Command& c, std::ostream& out) {
  const ExperimentConfig cfg = c.config();
  emit(run_evaluation(cfg).to_json(), c, "--out", out);
  return Ok;
}

int certify(const Command& c, std::ostream& out) {
  const ExperimentConfig cfg = c.config();
  const Pipeline p = build_pipeline(cfg);
  const CertificationResult res = run_certification(cfg, p);
  if (c.has("--curve")) write_curve_csv(c.path("--curve"), res.curve);
  ordered_json rep = {{"sigma", cfg.certify.sigma},
                      {"samples", cfg.certify.samples},
                      {"mode", to_string(cfg.certify.options.mode)},
                      {"purify", cfg.certify.purify}};
  const ordered_json body = res.to_json();
  for (const auto& [k, v] : body.items()) rep[k] = v;
  emit(rep, c, "--out", out);
  return Ok;
}

int detect(const Command& c, std::ostream& out) {
  const ExperimentConfig cfg = c.config();
  const Pipeline p = build_pipeline(cfg);
  const Dataset natural = head(p.test, sample_count(cfg, p.test));
  const Dataset attacked =
      c.has("--attacked") ? read_input(c, "--attacked", p, natural) : attack_rows(cfg, p, natural).adversarial;
  const DetectionResult res = run_detection(cfg, p, natural.features, attacked.features);
  if (c.has("--histogram")) write_histogram_csv(c.path("--histogram"), res.histogram);
  ordered_json rep = {{"attacked_source", c.has("--attacked") ? c.path("--attacked") : cfg.attack.name},
                      {"calibrated", cfg.detect.calibrate}};
  const ordered_json body = res.to_json();
  for (const auto& [k, v] : body.items()) rep[k] = v;
  emit(rep, c, "--out", out);
  return Ok;
}

int calibrate(const Command& c, std::ostream& out) {
  const ExperimentConfig cfg = c.config();
  const Pipeline p = build_pipeline(cfg);
  const Dataset natural = read_input(c, "--natural", p, p.train);
  const double th = calibrate_on(cfg, p, natural.features);
  emit(ordered_json{{"threshold", th}, {"quantile", cfg.detect.quantile}, {"count", natural.size()},
                    {"set", c.has("--natural") ? c.path("--natural") : "train"}},
       c, "--out", out);
  return Ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive denoising purification: training, attacks, purification, certification and detection"};
  app.require_subcommand(1);
  std::map<std::string, std::unique_ptr<Command>> commands;
  std::map<std::string, std::function<int(const Command&)>> handlers;
  auto add = [&](const std::string& name, const std::string& help) -> Command& {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, help);
    Command& ref = *c;
    commands[name] = std::move(c);
    return ref;
  };

  Command& gen = add("gen-data", "Generate (or convert) a dataset file");
  add_common(gen, true);
  gen.map("--classes", "data.classes", "Blob count");
  gen.map("--dim", "data.dim", "Feature dimension");
  gen.map("--n-per-blob", "data.n_per_blob", "Rows per blob");
  gen.map("--separation", "data.separation", "Center sphere radius");
  gen.map("--noise-std", "data.noise_std", "Blob standard deviation");
  gen.file("--out", "Dataset file to write", true);
  handlers["gen-data"] = [&](const Command& c) { return gen_data(c, out); };

  for (const bool score : {true, false}) {
    const std::string name = score ? "train-score" : "train-classifier";
    Command& t = add(name, score ? "Train the score network" : "Train the classifier");
    add_common(t, false);
    t.file("--data", "Dataset file to use instead of the configured source");
    t.map("--epochs", score ? "score.epochs" : "classifier.epochs", "Training epochs");
    t.file("--out", "Checkpoint to write", true);
    handlers[name] = [&, score](const Command& c) { return train_model(c, out, score); };
  }

  Command& atk = add("attack", "Attack test samples and report bare-classifier accuracy");
  add_common(atk, false);
  add_models(atk);
  add_attack(atk);
  atk.map("--steps", "attack.steps", "Attack iterations");
  atk.file("--out", "Report JSON (default: stdout)");
  atk.file("--adversarial-out", "Dataset file of adversarial examples");
  handlers["attack"] = [&](const Command& c) { return attack(c, out); };

  Command& pur = add("purify", "Purify inputs and classify them with the ensemble");
  add_common(pur, false);
  add_models(pur);
  pur.map("--sigma", "purify.sigma", "Injection noise level or \"median\"");
  pur.map("--runs", "purify.runs", "Ensemble size");
  pur.map("--steps", "purify.steps", "Purification step budget");
  pur.map("--max-samples", "eval.max_samples", "Number of inputs");
  pur.file("--input", "Dataset file to purify (default: test split)");
  pur.file("--out", "Report JSON (default: stdout)");
  pur.file("--purified-out", "Dataset file of purified inputs (first ensemble run)");
  pur.app->add_flag("--dual-noise", pur.dual_noise, "Pick the noise level from the score-norm detector");
  handlers["purify"] = [&](const Command& c) { return purify(c, out); };

  Command& ev = add("evaluate", "Clean and robust accuracy of the purified classifier");
  add_common(ev, false);
  add_models(ev);
  add_attack(ev);
  ev.map("--runs", "purify.runs", "Ensemble size");
  ev.file("--out", "Report JSON (default: stdout)");
  handlers["evaluate"] = [&](const Command& c) { return evaluate(c, out); };

  Command& cert = add("certify", "Randomized-smoothing certification curve");
  add_common(cert, false);
  add_models(cert);
  cert.map("--sigma", "certify.sigma", "Smoothing noise level");
  cert.map("--samples", "certify.samples", "Noise draws per input");
  cert.map("--max-samples", "certify.max_samples", "Number of test samples");
  cert.file("--out", "Report JSON (default: stdout)");
  cert.file("--curve", "CSV of radius,certified_accuracy");
  handlers["certify"] = [&](const Command& c) { return certify(c, out); };

  Command& det = add("detect", "Score-norm detection of attacked inputs");
  add_common(det, false);
  add_models(det);
  add_attack(det);
  det.map("--threshold", "detect.s_th", "Fixed threshold (used when detect.calibrate is false)");
  det.file("--attacked", "Dataset file of attacked inputs (default: attack the test split)");
  det.file("--out", "Report JSON (default: stdout)");
  det.file("--histogram", "CSV of set,bin_lo,bin_hi,count");
  handlers["detect"] = [&](const Command& c) { return detect(c, out); };

  Command& cal = add("calibrate-threshold", "Detection threshold from natural score norms");
  add_common(cal, false);
  add_models(cal);
  cal.map("--quantile", "detect.quantile", "Quantile of natural norms");
  cal.file("--natural", "Dataset file of natural inputs (default: training split)");
  cal.file("--out", "Report JSON (default: stdout)");
  handlers["calibrate-threshold"] = [&](const Command& c) { return calibrate(c, out); };

  std::vector<std::string> argv_store = args.empty() ? std::vector<std::string>{"adp"} : args;
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Ok : Usage;
  }

  for (const auto& [name, cmd] : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      return handlers.at(name)(*cmd);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return Usage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return Runtime;
    }
  }
  return Usage;
}

}  // namespace adp::cli
