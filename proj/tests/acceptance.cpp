// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include "adp/attacks.hpp"
#include "adp/certify.hpp"
#include "adp/detect.hpp"
#include "adp/errors.hpp"
#include "adp/harness.hpp"
#include "adp/purify.hpp"
#include "adp/training.hpp"
#include "oracles.hpp"

using namespace adp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double dot_v(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---------------------------------------------------------------- desk benchmark

ExperimentConfig desk_config(std::uint64_t seed) {
  ExperimentConfig cfg = load_config(ADP_DESK_CONFIG);
  cfg.data.seed = seed;
  cfg.eval.seed = seed;
  cfg.eval.threads = 1;
  return cfg;
}

// Trained once per seed and shared by the benchmark criteria.
const Pipeline& desk_pipeline(std::uint64_t seed) {
  static std::map<std::uint64_t, Pipeline> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) it = cache.emplace(seed, build_pipeline(desk_config(seed))).first;
  return it->second;
}

constexpr std::uint64_t kSeeds = 5;

// ---------------------------------------------------------------- criteria

Outcome gradient_soundness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t m = 0; m < 20; ++m) {
    RngStream rng(1000 + m);
    const Activation act = m % 2 ? Activation::Softplus : Activation::Tanh;
    // Even: score shape D -> h -> h -> D; odd: classifier shape D -> h -> k.
    const std::vector<std::size_t> dims =
        m < 10 ? std::vector<std::size_t>{8, 16, 16, 8} : std::vector<std::size_t>{8, 12, 4};
    MlpModel model = MlpModel::glorot({dims, act}, rng);
    for (std::size_t l = 0; l < model.spec().layer_count(); ++l)
      for (double& b : model.bias(l)) b = 0.3 * rng.normal();
    Vector x(dims.front()), u(dims.back());
    for (double& v : x) v = rng.normal();
    for (double& v : u) v = rng.normal();

    auto fx = [&](std::span<const double> v) { return dot_v(u, mlp_forward(model, v)); };
    const Vector gx = mlp_input_grad(model, x, u);
    for (std::size_t i = 0; i < x.size(); ++i, ++checked)
      worst = std::max(worst, oracle::rel_err(gx[i], oracle::central_diff(fx, x, i, 1e-5), 1e-4));

    const Vector p0(model.params().begin(), model.params().end());
    auto fp = [&](std::span<const double> p) {
      const MlpModel copy(model.spec(), Vector(p.begin(), p.end()));
      return dot_v(u, mlp_forward(copy, x));
    };
    const Vector gp = mlp_param_grad(model, x, u);
    for (std::size_t i = 0; i < p0.size(); ++i, ++checked)
      worst = std::max(worst, oracle::rel_err(gp[i], oracle::central_diff(fp, p0, i, 1e-5), 1e-4));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-5 && t < 30.0,
          fmt("max rel err %.2e over %zu gradient entries of 20 MLPs (need < 1e-5), %.2f s (need < 30 s)", worst,
              checked, t)};
}

Outcome dsm_oracle() {
  const auto t0 = Clock::now();
  Matrix data(2000, 1);
  RngStream rng(11);
  for (double& v : data.data) v = rng.normal();
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 64;
  cfg.seed = 3;
  cfg.schedule = NoiseSchedule{{0.5}};
  const TrainResult res = train_score({{1, 32, 1}, Activation::Tanh}, data, cfg);
  double worst = 0.0;
  std::string vals;
  for (double x : {-1.0, 1.0}) {
    const double learned = score(res.model, Vector{x}, 0.5)[0];
    worst = std::max(worst, std::abs(learned - (-x / 1.25)));
    vals += fmt(" s(%+.0f)=%.4f vs %.4f;", x, learned, -x / 1.25);
  }
  const double t = seconds_since(t0);
  return {worst <= 0.15 && t < 60.0, fmt("%s max |err| %.4f (need <= 0.15), %.1f s (need < 60 s)", vals.c_str(), worst, t)};
}

Outcome adaptive_step_exactness() {
  const Vector mu{0.2, 0.4, -0.3, 1.0};
  double worst_alpha = 0.0, worst_ratio = 0.0;
  for (double c : {0.1, 0.25, 1.0}) {
    const ScoreFn field = [&mu, c](std::span<const double> x) {
      Vector s(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) s[i] = -(x[i] - mu[i]) / c;
      return s;
    };
    PurifyConfig cfg;
    cfg.max_steps = 20;
    cfg.tau_stop = 0.0;
    const PurifyTrajectory traj = deterministic_purify(field, Vector{2.0, -1.0, 0.5, 3.0}, cfg);
    if (traj.step_sizes.size() != 20) return {false, fmt("c=%g: trajectory stopped after %zu steps", c, traj.step_sizes.size())};
    for (std::size_t t = 0; t < traj.step_sizes.size(); ++t) {
      worst_alpha = std::max(worst_alpha, oracle::rel_err(traj.step_sizes[t], cfg.lambda * c));
      const double ratio = l2_distance(traj.states[t + 1], mu) / l2_distance(traj.states[t], mu);
      worst_ratio = std::max(worst_ratio, oracle::rel_err(ratio, 1.0 - cfg.lambda));
    }
  }
  return {worst_alpha < 1e-6 && worst_ratio < 1e-4,
          fmt("c in {0.1,0.25,1}: max rel err alpha vs lambda*c %.2e (need < 1e-6), contraction vs 0.95 %.2e (need < 1e-4)",
              worst_alpha, worst_ratio)};
}

Outcome deterministic_vs_langevin() {
  std::string per;
  double gap_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const ExperimentConfig cfg = desk_config(seed);
    const Pipeline& p = desk_pipeline(seed);
    const ScoreFn score = p.score();
    PurifyConfig det = p.purify;
    det.sigma = 0.0;
    det.max_steps = 10;
    const std::size_t n = std::min<std::size_t>(cfg.eval.max_samples, p.test.size());
    std::vector<int> det_ok(n), lang_ok(n);
    parallel_for(n, worker_count(), [&](std::size_t i) {
      const auto x = p.test.features.row(i);
      const std::size_t y = p.test.labels[i];
      const Vector adv = run_attack(cfg, p, x, y, i).adversarial;
      const PurifyTrajectory traj = deterministic_purify(score, adv, det);
      det_ok[i] = predict_label(p.clf(), traj.last()) == y;
      // Langevin with the same budget, started at the deterministic run's first step size.
      const double alpha = traj.step_sizes.empty() ? det.lambda * det.delta : traj.step_sizes.front();
      RngStream rng = purify_stream(cfg, i);
      lang_ok[i] = predict_label(p.clf(), langevin_purify(score, adv, 10, alpha, rng, p.purify.box)) == y;
    });
    const double d = std::count(det_ok.begin(), det_ok.end(), 1) / static_cast<double>(n);
    const double l = std::count(lang_ok.begin(), lang_ok.end(), 1) / static_cast<double>(n);
    gap_sum += d - l;
    per += fmt(" s%llu det %.3f lang %.3f;", static_cast<unsigned long long>(seed), d, l);
  }
  const double gap = 100.0 * gap_sum / kSeeds;
  return {gap >= 5.0, fmt("10 steps each on PGD inputs:%s mean gap %+.1f points (need >= +5)", per.c_str(), gap)};
}

Outcome purification_efficacy() {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = desk_config(1);
  // Trained here rather than taken from the cache so the runtime covers it.
  const Pipeline p = build_pipeline(cfg);
  const EvaluationReport r = run_evaluation(cfg, p);
  const double t = seconds_since(t0);
  const bool bare_ok = r.bare_robust_accuracy < 0.30;
  const bool adp_ok = r.clean_accuracy - r.robust_accuracy <= 0.10;
  return {bare_ok && adp_ok && t < 600.0,
          fmt("n=%zu eps=%.4f: bare PGD acc %.3f (need < 0.30); ADP clean %.3f robust %.3f, gap %.1f points (need <= 10); "
              "%.1f s incl. training (need < 600 s)",
              r.records.size(), p.threat.epsilon, r.bare_robust_accuracy, r.clean_accuracy, r.robust_accuracy,
              100.0 * (r.clean_accuracy - r.robust_accuracy), t)};
}

Outcome noise_helps_under_bpda() {
  std::string per;
  double gap_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    ExperimentConfig cfg = desk_config(seed);
    cfg.attack.name = "bpda";
    cfg.attack.eot_samples = 5;
    cfg.eval.max_samples = 40;
    Pipeline med = desk_pipeline(seed);
    resolve_pipeline(cfg, med);
    const double with_noise = run_evaluation(cfg, med).robust_accuracy;

    cfg.purify.median_sigma = false;
    cfg.purify.config.sigma = 0.0;
    Pipeline zero = med;
    resolve_pipeline(cfg, zero);
    const double without = run_evaluation(cfg, zero).robust_accuracy;
    gap_sum += with_noise - without;
    per += fmt(" s%llu median-sigma %.3f zero %.3f;", static_cast<unsigned long long>(seed), with_noise, without);
  }
  const double gap = 100.0 * gap_sum / kSeeds;
  return {gap >= 5.0, fmt("BPDA+EOT(5), 40 samples:%s mean gap %+.1f points (need >= +5)", per.c_str(), gap)};
}

Outcome attack_equivalences() {
  RngStream rng(5);
  MlpModel clf = MlpModel::glorot({{6, 12, 3}, Activation::Tanh}, rng);
  for (std::size_t l = 0; l < clf.spec().layer_count(); ++l)
    for (double& b : clf.bias(l)) b = 0.2 * rng.normal();
  Vector x(6);
  for (double& v : x) v = rng.uniform();
  Matrix a(6, 6);
  for (double& v : a.data) v = 0.5 * rng.normal();
  const ScoreFn field = [&a](std::span<const double> v) {
    Vector s(6, 0.0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) s[i] += a(i, j) * v[j];
    return s;
  };
  const Purifier noisy = [](std::span<const double> v, RngStream& r) {
    Vector out(v.begin(), v.end());
    for (double& e : out) e = 0.9 * e + 0.05 + 0.1 * r.normal();
    return out;
  };

  bool bpda_bitwise = true, eot_bitwise = true, unroll_bitwise = true;
  double joint_diff = 0.0, ball_excess = 0.0;
  for (NormKind n : {NormKind::Linf, NormKind::L2}) {
    AttackConfig cfg;
    cfg.threat = {n, 0.3};
    cfg.steps = 12;
    cfg.seed = 9;
    const AttackResult ref = pgd(clf, x, 1, cfg);
    bpda_bitwise &= bpda(identity_purifier(), clf, x, 1, cfg).adversarial == ref.adversarial;

    const EotGradFn g = [&](std::span<const double> v, RngStream&) { return classifier_loss_grad(clf, v, 1); };
    RngStream unused(0);
    const Vector plain = g(x, unused);
    for (std::size_t k : {1u, 5u, 16u}) eot_bitwise &= eot_gradient(g, x, k, 0.0, RngStream(k)) == plain;

    AttackConfig w1 = cfg;
    w1.joint_weight = 1.0;
    for (const AttackResult& r : {joint_score_attack(clf, field, x, 1, w1), joint_full_attack(clf, noisy, x, 1, w1)})
      for (std::size_t i = 0; i < x.size(); ++i) joint_diff = std::max(joint_diff, std::abs(r.adversarial[i] - ref.adversarial[i]));

    AttackConfig u0 = cfg;
    u0.unroll_step = 0.0;
    unroll_bitwise &= one_step_unrolling_attack(clf, field, x, 1, u0).adversarial == ref.adversarial;

    AttackConfig all = cfg;
    all.eot_samples = 3;
    all.spsa_queries = 64;
    all.unroll_step = 0.1;
    const LossFn loss = [&](std::span<const double> v) { return softmax_cross_entropy(mlp_forward(clf, v), 1).loss; };
    const auto label = [&](std::span<const double> v) { return predict_label(clf, v); };
    for (const AttackResult& r :
         {ref, bpda(noisy, clf, x, 1, all), spsa_attack(loss, label, x, 1, all), joint_score_attack(clf, field, x, 1, all),
          joint_full_attack(clf, noisy, x, 1, all), approximate_input_attack(clf, noisy, x, 1, all),
          one_step_unrolling_attack(clf, field, x, 1, all)}) {
      const double d = n == NormKind::L2 ? l2_distance(r.adversarial, x) : linf_distance(r.adversarial, x);
      ball_excess = std::max(ball_excess, d - 0.3);
    }
  }
  const bool pass = bpda_bitwise && eot_bitwise && unroll_bitwise && joint_diff <= 1e-12 && ball_excess <= 1e-12;
  return {pass, fmt("bpda(identity)==pgd %s; eot(n,0)==grad %s; joint(w=1) max diff %.1e; unroll(0)==pgd %s; "
                    "max ball excess %.1e (need <= 1e-12)",
                    bpda_bitwise ? "bitwise" : "DIFFERS", eot_bitwise ? "bitwise" : "DIFFERS", joint_diff,
                    unroll_bitwise ? "bitwise" : "DIFFERS", ball_excess)};
}

Outcome spsa_sanity() {
  int good = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RngStream rng(seed);
    Matrix h(16, 16, 0.0);
    for (std::size_t i = 0; i < 16; ++i) {
      h(i, i) = 1.0 + rng.uniform();
      if (i + 1 < 16) h(i, i + 1) = h(i + 1, i) = 0.2 * rng.normal();
    }
    Vector b(16), x(16);
    for (double& v : b) v = rng.normal();
    for (double& v : x) v = rng.normal();
    const LossFn f = [&](std::span<const double> v) {
      double s = 0.0;
      for (std::size_t i = 0; i < 16; ++i) {
        s += b[i] * v[i];
        for (std::size_t j = 0; j < 16; ++j) s += 0.5 * v[i] * h(i, j) * v[j];
      }
      return s;
    };
    Vector diff(16);
    RngStream q(seed, 77);
    const Vector g = spsa_gradient(f, x, 1280, 0.01, AttackConfig{}.spsa_directions, q);
    Vector truth(16);
    for (std::size_t i = 0; i < 16; ++i) {
      truth[i] = b[i];
      for (std::size_t j = 0; j < 16; ++j) truth[i] += h(i, j) * x[j];
      diff[i] = g[i] - truth[i];
    }
    const double e = l2_norm(diff) / l2_norm(truth);
    worst = std::max(worst, e);
    good += e < 0.1;
  }
  return {good >= 9, fmt("%d/10 seeds under 10%% relative L2 error at 1280 queries (need >= 9), worst %.2e", good, worst)};
}

Outcome certification_oracle() {
  const double r = certified_radius(0.9, 0.1, 0.25);
  const double oracle_r = 0.125 * (oracle::phi_inv(0.9) - oracle::phi_inv(0.1));
  const bool radius_ok = std::abs(r - oracle_r) <= 1e-5;

  std::size_t grid = 0, exact = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double pa = 0.55 + 0.044 * i;
      const double pb = (1.0 - pa) * (0.05 + 0.095 * j);
      const double base = certified_radius(pa, pb, 0.25);
      bool all = true;
      for (double k : {0.25, 0.5, 2.0, 4.0, 8.0}) all &= certified_radius(pa, pb, 0.25 * k) == k * base;
      ++grid;
      exact += all;
    }

  const LabelFn threshold = [](std::span<const double> v) -> std::size_t { return v[0] > 0.0 ? 1 : 0; };
  const std::size_t n = 10000;
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  double worst = 0.0;
  for (double x : {-0.3, -0.1, 0.0, 0.05, 0.1, 0.2, 0.4}) {
    const SmoothingEstimate e = estimate_top2(threshold, Vector{x}, 0.25, n, RngStream(31));
    const double p1 = static_cast<double>(e.counts.size() > 1 ? e.counts[1] : 0) / static_cast<double>(n);
    worst = std::max(worst, std::abs(p1 - oracle::phi(x / 0.25)));
  }
  return {radius_ok && exact == grid && worst <= tol,
          fmt("R(0.9,0.1,0.25)=%.7f, oracle %.7f, |diff| %.1e (need <= 1e-5; the literal 0.320364 is %.1e away); "
              "k-linearity exact on %zu/%zu grid points (power-of-two k); max |pA - Phi(x/sigma)| %.4f (need <= %.3f)",
              r, oracle_r, std::abs(r - oracle_r), std::abs(r - 0.320364), exact, grid, worst, tol)};
}

Outcome detection_separation() {
  const ExperimentConfig cfg = desk_config(1);
  const Pipeline& p = desk_pipeline(1);
  const std::size_t n = std::min<std::size_t>(200, p.test.size());
  Matrix natural(n, p.test.dim()), attacked(n, p.test.dim());
  parallel_for(n, worker_count(), [&](std::size_t i) {
    const AttackResult r = run_attack(cfg, p, p.test.features.row(i), p.test.labels[i], i);
    for (std::size_t j = 0; j < p.test.dim(); ++j) {
      natural(i, j) = p.test.features(i, j);
      attacked(i, j) = r.adversarial[j];
    }
  });
  const DetectionResult d = run_detection(cfg, p, natural, attacked);
  const double med_nat = median_of(d.natural_norms), med_adv = median_of(d.attacked_norms);
  return {med_adv > med_nat && d.auc > 0.8,
          fmt("%zu+%zu samples: median norm natural %.1f attacked %.1f; AUC %.3f (need > 0.8); calibrated threshold %.1f "
              "gives TPR %.3f FPR %.3f",
              n, n, med_nat, med_adv, d.auc, d.threshold, d.true_positive_rate, d.false_positive_rate)};
}

Outcome determinism() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "adp_acceptance";
  std::filesystem::create_directories(dir);
  auto invoke = [&](const std::string& out) {
    const std::string cmd = std::string("\"") + ADP_CLI_PATH + "\" evaluate --config \"" + ADP_DESK_CONFIG +
                            "\" --max-samples 40 --seed 7 --out \"" + (dir / out).string() + "\"";
    return std::system(cmd.c_str());
  };
  const int a = invoke("first.json"), b = invoke("second.json");
  auto slurp = [&](const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string ra = slurp("first.json"), rb = slurp("second.json");
  std::filesystem::remove_all(dir);
  if (a != 0 || b != 0) return {false, fmt("evaluate exited with %d and %d", a, b)};
  return {!ra.empty() && ra == rb, fmt("two `adp evaluate` processes, seed 7: reports of %zu and %zu bytes, %s", ra.size(),
                                       rb.size(), ra == rb ? "byte-identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::tuple<int, const char*, std::function<Outcome()>>> criteria = {
      {1, "gradient soundness", gradient_soundness},
      {2, "DSM analytic oracle", dsm_oracle},
      {3, "adaptive step exactness", adaptive_step_exactness},
      {4, "deterministic vs Langevin", deterministic_vs_langevin},
      {5, "purification efficacy", purification_efficacy},
      {6, "noise injection under BPDA", noise_helps_under_bpda},
      {7, "attack equivalences", attack_equivalences},
      {8, "SPSA sanity", spsa_sanity},
      {9, "certification oracle", certification_oracle},
      {10, "detection separation", detection_separation},
      {11, "determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& [id, name, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s C%d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
