#include "adp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "adp/errors.hpp"

namespace adp {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown fields.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return join(path_, key); }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(field(key), "must be finite");
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number or null");
      out = v->get<double>();
    } else if (j_.contains(key)) {
      out.reset();
    }
  }

  void count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) out = as_count(*v, field(key));
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<long long>() < 0))
        throw ConfigError(field(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void flag(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void counts(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        out.push_back(as_count((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back((*v)[i].get<double>());
      }
    }
  }

  template <class Enum>
  void choice(const std::string& key, Enum& out, std::initializer_list<std::pair<const char*, Enum>> options) {
    std::string s;
    text(key, s);
    if (s.empty()) return;
    std::string names;
    for (const auto& [name, value] : options) {
      if (s == name) {
        out = value;
        return;
      }
      names += names.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(field(key), "unknown value '" + s + "' (expected one of: " + names + ")");
  }

  ObjectReader child(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return ObjectReader(v ? *v : empty, field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
  }

 private:
  static std::size_t as_count(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
      throw ConfigError(where, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_network(ObjectReader& r, NetworkSection& n) {
  r.counts("hidden", n.hidden);
  r.choice("activation", n.activation, {{"tanh", Activation::Tanh}, {"softplus", Activation::Softplus}});
  r.count("epochs", n.epochs);
  r.count("batch_size", n.batch_size);
  r.number("lr", n.lr);
  r.text("checkpoint", n.checkpoint);
}

json network_json(const NetworkSection& n) {
  return {{"hidden", n.hidden},         {"activation", to_string(n.activation)}, {"epochs", n.epochs},
          {"batch_size", n.batch_size}, {"lr", n.lr},                            {"checkpoint", n.checkpoint}};
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

}  // namespace

const char* to_string(NormKind n) { return n == NormKind::Linf ? "linf" : "l2"; }

const char* to_string(StopRule r) { return r == StopRule::ScoreNorm ? "score_norm" : "step_size"; }

const char* to_string(EnsembleMode m) {
  switch (m) {
    case EnsembleMode::PreSoftmax: return "pre_softmax";
    case EnsembleMode::PostSoftmax: return "post_softmax";
    case EnsembleMode::ArgmaxVote: return "argmax_vote";
  }
  return "?";
}

const char* to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "softplus"; }

const char* to_string(CertifyMode m) { return m == CertifyMode::Empirical ? "empirical" : "conservative"; }

ExperimentConfig::ExperimentConfig() {
  classifier.hidden = {32};
  classifier.epochs = 50;
  score.hidden = {64, 64};
  score.epochs = 100;
  attack.gap_fraction = 0.5;
  purify.config.sigma = 0.25;
  detect.config.s_th = 25.0;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  ObjectReader root(j, "");

  {
    ObjectReader r = root.child("data");
    r.text("source", c.data.source);
    r.text("path", c.data.path);
    r.text("images", c.data.images);
    r.text("labels", c.data.labels);
    r.flag("normalize", c.data.normalize);
    r.count("classes", c.data.classes);
    r.count("dim", c.data.dim);
    r.count("n_per_blob", c.data.n_per_blob);
    r.number("separation", c.data.separation);
    r.number("noise_std", c.data.noise_std);
    r.seed("seed", c.data.seed);
    r.number("test_fraction", c.data.test_fraction);
    r.finish();
  }
  {
    ObjectReader r = root.child("classifier");
    read_network(r, c.classifier);
    r.finish();
  }
  {
    ObjectReader r = root.child("score");
    read_network(r, c.score);
    r.count("levels", c.score.levels);
    r.number("sigma_min", c.score.sigma_min);
    r.optional_number("sigma_max", c.score.sigma_max);
    r.finish();
  }
  {
    ObjectReader r = root.child("attack");
    AttackSection& a = c.attack;
    r.text("name", a.name);
    r.choice("norm", a.norm, {{"linf", NormKind::Linf}, {"l2", NormKind::L2}});
    if (r.find("epsilon")) a.gap_fraction.reset();  // an explicit epsilon wins over the default gap rule
    r.number("epsilon", a.epsilon);
    r.optional_number("gap_fraction", a.gap_fraction);
    r.count("steps", a.steps);
    r.number("step_size", a.step_size);
    r.count("eot_samples", a.eot_samples);
    r.number("eot_sigma", a.eot_sigma);
    r.number("joint_weight", a.joint_weight);
    r.count("spsa_queries", a.spsa_queries);
    r.number("spsa_perturb", a.spsa_perturb);
    r.optional_number("unroll_step", a.unroll_step);
    r.flag("known_step_sizes", a.known_step_sizes);
    r.finish();
  }
  {
    ObjectReader r = root.child("purify");
    PurifyConfig& p = c.purify.config;
    r.number("lambda", p.lambda);
    r.number("delta", p.delta);
    if (const json* v = r.find("sigma")) {
      if (v->is_string() && v->get<std::string>() == "median") {
        c.purify.median_sigma = true;
      } else if (v->is_number()) {
        c.purify.median_sigma = false;
        p.sigma = v->get<double>();
      } else {
        throw ConfigError(r.field("sigma"), "expected a number or \"median\"");
      }
    }
    r.count("runs", p.runs);
    r.count("steps", p.max_steps);
    r.number("tau_stop", p.tau_stop);
    r.choice("stop_rule", p.stop_rule, {{"score_norm", StopRule::ScoreNorm}, {"step_size", StopRule::StepSize}});
    r.choice("ensemble", p.ensemble,
             {{"pre_softmax", EnsembleMode::PreSoftmax},
              {"post_softmax", EnsembleMode::PostSoftmax},
              {"argmax_vote", EnsembleMode::ArgmaxVote}});
    ObjectReader b = r.child("box");
    b.flag("enabled", p.box.enabled);
    b.number("lo", p.box.lo);
    b.number("hi", p.box.hi);
    b.finish();
    r.finish();
  }
  {
    ObjectReader r = root.child("eval");
    r.count("max_samples", c.eval.max_samples);
    r.seed("seed", c.eval.seed);
    r.count("threads", c.eval.threads);
    r.flag("record_wall_time", c.eval.record_wall_time);
    r.finish();
  }
  {
    ObjectReader r = root.child("detect");
    r.number("s_th", c.detect.config.s_th);
    r.number("beta", c.detect.config.beta);
    r.flag("calibrate", c.detect.calibrate);
    r.number("quantile", c.detect.quantile);
    r.count("bins", c.detect.bins);
    r.finish();
  }
  {
    ObjectReader r = root.child("certify");
    r.number("sigma", c.certify.sigma);
    r.count("samples", c.certify.samples);
    r.numbers("radii", c.certify.radii);
    r.choice("mode", c.certify.options.mode,
             {{"empirical", CertifyMode::Empirical}, {"conservative", CertifyMode::Conservative}});
    r.number("alpha", c.certify.options.alpha);
    r.flag("purify", c.certify.purify);
    r.count("max_samples", c.certify.max_samples);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  require(data.source == "synthetic" || data.source == "file" || data.source == "idx", "data.source",
          "must be one of synthetic, file, idx");
  if (data.source == "file") require(!data.path.empty(), "data.path", "required when data.source is 'file'");
  if (data.source == "idx") {
    require(!data.images.empty(), "data.images", "required when data.source is 'idx'");
    require(!data.labels.empty(), "data.labels", "required when data.source is 'idx'");
  }
  require(data.classes >= 2, "data.classes", "must be >= 2");
  require(data.dim >= 1, "data.dim", "must be >= 1");
  require(data.n_per_blob >= 1, "data.n_per_blob", "must be >= 1");
  require(data.separation >= 0.0, "data.separation", "must be >= 0");
  require(data.noise_std >= 0.0, "data.noise_std", "must be >= 0");
  require(data.test_fraction > 0.0 && data.test_fraction < 1.0, "data.test_fraction", "must lie in (0, 1)");

  for (const auto& [name, net] : {std::pair<const char*, const NetworkSection*>{"classifier", &classifier},
                                  {"score", &score}}) {
    const std::string p = name;
    for (std::size_t w : net->hidden) require(w >= 1, p + ".hidden", "widths must be >= 1");
    require(net->batch_size >= 1, p + ".batch_size", "must be >= 1");
    require(net->lr > 0.0, p + ".lr", "must be > 0");
  }
  require(score.levels >= 1, "score.levels", "must be >= 1");
  require(score.sigma_min > 0.0, "score.sigma_min", "must be > 0");
  if (score.sigma_max) require(*score.sigma_max >= score.sigma_min, "score.sigma_max", "must be >= score.sigma_min");

  static const std::set<std::string> attacks = {"none",       "pgd",        "bpda",
                                                "spsa",       "joint_score", "joint_full",
                                                "approximate_input", "unroll"};
  require(attacks.count(attack.name) == 1, "attack.name",
          "unknown attack '" + attack.name +
              "' (expected none, pgd, bpda, spsa, joint_score, joint_full, approximate_input, unroll)");
  require(attack.epsilon >= 0.0, "attack.epsilon", "must be >= 0");
  if (attack.gap_fraction) require(*attack.gap_fraction >= 0.0, "attack.gap_fraction", "must be >= 0");
  require(attack.steps >= 1, "attack.steps", "must be >= 1");
  require(attack.step_size >= 0.0, "attack.step_size", "must be >= 0");
  require(attack.eot_samples >= 1, "attack.eot_samples", "must be >= 1");
  require(attack.eot_sigma >= 0.0, "attack.eot_sigma", "must be >= 0");
  require(attack.joint_weight >= 0.0 && attack.joint_weight <= 1.0, "attack.joint_weight", "must lie in [0, 1]");
  require(attack.spsa_queries >= 2 && attack.spsa_queries % 2 == 0, "attack.spsa_queries", "must be even and >= 2");
  require(attack.spsa_perturb > 0.0, "attack.spsa_perturb", "must be > 0");
  if (attack.unroll_step) require(*attack.unroll_step >= 0.0, "attack.unroll_step", "must be >= 0");

  const PurifyConfig& p = purify.config;
  require(p.lambda > 0.0 && p.lambda < 1.0, "purify.lambda", "must lie in (0, 1)");
  require(p.delta > 0.0, "purify.delta", "must be > 0");
  require(p.sigma >= 0.0, "purify.sigma", "must be >= 0");
  require(p.runs >= 1, "purify.runs", "must be >= 1");
  require(p.max_steps >= 1, "purify.steps", "must be >= 1");
  require(p.tau_stop >= 0.0, "purify.tau_stop", "must be >= 0");
  if (p.box.enabled) require(p.box.lo < p.box.hi, "purify.box", "lo must be < hi when enabled");

  require(eval.max_samples >= 1, "eval.max_samples", "must be >= 1");
  require(detect.config.s_th > 0.0, "detect.s_th", "must be > 0");
  require(detect.config.beta > 0.0 && detect.config.beta <= 1.0, "detect.beta", "must lie in (0, 1]");
  require(detect.quantile > 0.0 && detect.quantile <= 1.0, "detect.quantile", "must lie in (0, 1]");
  require(detect.bins >= 1, "detect.bins", "must be >= 1");
  require(certify.sigma > 0.0, "certify.sigma", "must be > 0");
  require(certify.samples >= 2, "certify.samples", "must be >= 2");
  require(certify.max_samples >= 1, "certify.max_samples", "must be >= 1");
  for (std::size_t i = 1; i < certify.radii.size(); ++i)
    require(certify.radii[i] > certify.radii[i - 1], "certify.radii", "must be strictly increasing");
  require(certify.options.alpha > 0.0 && certify.options.alpha < 1.0, "certify.alpha", "must lie in (0, 1)");
}

json ExperimentConfig::to_json() const {
  json j;
  j["data"] = {{"source", data.source},       {"path", data.path},
               {"images", data.images},       {"labels", data.labels},
               {"normalize", data.normalize}, {"classes", data.classes},
               {"dim", data.dim},             {"n_per_blob", data.n_per_blob},
               {"separation", data.separation}, {"noise_std", data.noise_std},
               {"seed", data.seed},           {"test_fraction", data.test_fraction}};
  j["classifier"] = network_json(classifier);
  j["score"] = network_json(score);
  j["score"]["levels"] = score.levels;
  j["score"]["sigma_min"] = score.sigma_min;
  j["score"]["sigma_max"] = score.sigma_max ? json(*score.sigma_max) : json(nullptr);
  j["attack"] = {{"name", attack.name},
                 {"norm", to_string(attack.norm)},
                 {"epsilon", attack.epsilon},
                 {"gap_fraction", attack.gap_fraction ? json(*attack.gap_fraction) : json(nullptr)},
                 {"steps", attack.steps},
                 {"step_size", attack.step_size},
                 {"eot_samples", attack.eot_samples},
                 {"eot_sigma", attack.eot_sigma},
                 {"joint_weight", attack.joint_weight},
                 {"spsa_queries", attack.spsa_queries},
                 {"spsa_perturb", attack.spsa_perturb},
                 {"unroll_step", attack.unroll_step ? json(*attack.unroll_step) : json(nullptr)},
                 {"known_step_sizes", attack.known_step_sizes}};
  const PurifyConfig& p = purify.config;
  j["purify"] = {{"lambda", p.lambda},
                 {"delta", p.delta},
                 {"sigma", purify.median_sigma ? json("median") : json(p.sigma)},
                 {"runs", p.runs},
                 {"steps", p.max_steps},
                 {"tau_stop", p.tau_stop},
                 {"stop_rule", to_string(p.stop_rule)},
                 {"ensemble", to_string(p.ensemble)},
                 {"box", {{"enabled", p.box.enabled}, {"lo", p.box.lo}, {"hi", p.box.hi}}}};
  j["eval"] = {{"max_samples", eval.max_samples},
               {"seed", eval.seed},
               {"threads", eval.threads},
               {"record_wall_time", eval.record_wall_time}};
  j["detect"] = {{"s_th", detect.config.s_th},
                 {"beta", detect.config.beta},
                 {"calibrate", detect.calibrate},
                 {"quantile", detect.quantile},
                 {"bins", detect.bins}};
  j["certify"] = {{"sigma", certify.sigma},
                  {"samples", certify.samples},
                  {"radii", certify.radii},
                  {"mode", to_string(certify.options.mode)},
                  {"alpha", certify.options.alpha},
                  {"purify", certify.purify},
                  {"max_samples", certify.max_samples}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void set_json_path(json& root, const std::string& dotted, json value) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(dotted, "empty path component");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace adp
