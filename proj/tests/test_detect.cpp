#include <doctest.h>

#include <cmath>

#include "adp/detect.hpp"
#include "adp/errors.hpp"

using namespace adp;

namespace {

ScoreFn radial(Vector mu, double c) {
  return [mu = std::move(mu), c](std::span<const double> x) {
    Vector s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = -(x[i] - mu[i]) / c;
    return s;
  };
}

const ScoreFn kZero = [](std::span<const double> x) { return Vector(x.size(), 0.0); };

// Fraction of (natural, attacked) pairs ordered correctly, ties half.
double brute_auc(const std::vector<double>& nat, const std::vector<double>& adv) {
  double s = 0.0;
  for (double a : adv)
    for (double n : nat) s += a > n ? 1.0 : (a == n ? 0.5 : 0.0);
  return s / static_cast<double>(nat.size() * adv.size());
}

}  // namespace

TEST_CASE("score_norm") {
  CHECK(score_norm(kZero, Vector{1.0, 2.0}) == 0.0);
  const Vector mu{1.0, -1.0};
  const ScoreFn s = radial(mu, 0.5);
  CHECK(score_norm(s, mu) == 0.0);
  CHECK(score_norm(s, Vector{1.0 + 3.0, -1.0}) == doctest::Approx(3.0 / 0.5));
  // Rotating the input about mu leaves the norm unchanged.
  const double th = 0.7;
  const Vector d{0.3, 0.4};
  const Vector rot{mu[0] + std::cos(th) * d[0] - std::sin(th) * d[1], mu[1] + std::sin(th) * d[0] + std::cos(th) * d[1]};
  CHECK(score_norm(s, Vector{mu[0] + d[0], mu[1] + d[1]}) == doctest::Approx(score_norm(s, rot)).epsilon(1e-14));
}

TEST_CASE("detect uses a strict threshold") {
  DetectConfig cfg;
  const ScoreFn s = radial({0.0}, 1.0);
  CHECK(detect(s, Vector{30.0}, cfg) == Verdict::Attacked);
  CHECK(detect(s, Vector{25.0}, cfg) == Verdict::Natural);
  CHECK(detect(kZero, Vector{1e6}, cfg) == Verdict::Natural);
  // Raising the threshold never turns natural into attacked.
  for (double x = 0.0; x < 50.0; x += 0.5) {
    DetectConfig lo = cfg, hi = cfg;
    lo.s_th = 10.0;
    hi.s_th = 20.0;
    if (detect(s, Vector{x}, lo) == Verdict::Natural) CHECK(detect(s, Vector{x}, hi) == Verdict::Natural);
  }
  DetectConfig bad;
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = DetectConfig{};
  bad.s_th = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK(std::string(to_string(Verdict::Attacked)) == "attacked");
}

TEST_CASE("dual_noise_purify") {
  const MlpModel clf({{2, 2}, Activation::Tanh}, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0});
  const ScoreFn s = radial({0.2, 0.8}, 0.5);
  PurifyConfig pc;
  pc.runs = 4;
  DetectConfig dc;
  dc.base_sigma = 0.25;

  // beta = 1: identical to ensemble_predict with the same stream.
  dc.beta = 1.0;
  const Vector x{0.6, 0.5};
  PurifyConfig plain = pc;
  plain.sigma = 0.25;
  const EnsemblePrediction ref = ensemble_predict(s, clf, x, plain, RngStream(5));
  const DualNoiseResult d1 = dual_noise_purify(s, clf, x, pc, dc, RngStream(5));
  CHECK(d1.prediction.label == ref.label);
  CHECK(d1.prediction.class_scores == ref.class_scores);

  // Natural verdict with beta = 0.2 injects 0.05.
  dc.beta = 0.2;
  const DualNoiseResult d2 = dual_noise_purify(s, clf, x, pc, dc, RngStream(5));
  CHECK(d2.verdict == Verdict::Natural);
  CHECK(d2.sigma_used == doctest::Approx(0.05));

  dc.s_th = 0.1;
  const DualNoiseResult d3 = dual_noise_purify(s, clf, Vector{5.0, 5.0}, pc, dc, RngStream(5));
  CHECK(d3.verdict == Verdict::Attacked);
  CHECK(d3.sigma_used == 0.25);

  dc.s_th = 25.0;
  const DualNoiseResult d4 = dual_noise_purify(kZero, clf, Vector{5.0, 5.0}, pc, dc, RngStream(5));
  CHECK(d4.verdict == Verdict::Natural);
  CHECK(d4.sigma_used == doctest::Approx(0.05));
}

TEST_CASE("histogram") {
  const Histogram one = histogram({{"natural", {1.0}}, {"attacked", {3.0}}, {"purified", {2.0}}}, 4);
  REQUIRE(one.edges.size() == 5);
  REQUIRE(one.counts.size() == 3);
  for (const auto& c : one.counts) {
    std::size_t nonzero = 0, total = 0;
    for (std::size_t v : c) {
      nonzero += v > 0;
      total += v;
    }
    CHECK(nonzero == 1);
    CHECK(total == 1);
  }
  CHECK(one.counts[1].back() == 1);  // the top edge is inclusive

  RngStream rng(3);
  std::vector<double> a(500), b(300);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = 2.0 + rng.normal();
  const Histogram h = histogram({{"natural", a}, {"attacked", b}}, 20);
  std::size_t sa = 0, sb = 0;
  for (std::size_t k = 0; k < 20; ++k) {
    sa += h.counts[0][k];
    sb += h.counts[1][k];
  }
  CHECK(sa == 500);
  CHECK(sb == 300);
  std::vector<double> rev(a.rbegin(), a.rend());
  CHECK(histogram({{"natural", rev}, {"attacked", b}}, 20).counts == h.counts);
  CHECK_THROWS(histogram({{"natural", {}}}, 5));

  // Score-norm histogram on a radial field: |s| = |x| / c.
  Matrix pts(3, 1);
  pts(0, 0) = 1.0;
  pts(1, 0) = 2.0;
  pts(2, 0) = 4.0;
  const Histogram sh = score_norm_histogram(radial({0.0}, 0.5), {{"natural", pts}}, 3);
  CHECK(sh.edges.front() == doctest::Approx(2.0));
  CHECK(sh.edges.back() == doctest::Approx(8.0));
}

TEST_CASE("calibrate_threshold uses the nearest-rank quantile") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(101 - i);
  CHECK(calibrate_threshold(v, 0.95) == 95.0);
  CHECK(calibrate_threshold(v, 1.0) == 100.0);
  CHECK(calibrate_threshold({7.0}, 0.95) == 7.0);
  CHECK(calibrate_threshold({1.0, 2.0, 3.0}, 0.5) == 2.0);
  CHECK_THROWS(calibrate_threshold({}, 0.95));
  // At most 5% of natural norms are strictly above the 95% threshold.
  RngStream rng(8);
  std::vector<double> nat(401);
  for (double& x : nat) x = std::abs(rng.normal());
  const double th = calibrate_threshold(nat, 0.95);
  std::size_t above = 0;
  for (double x : nat) above += x > th;
  CHECK(above <= static_cast<std::size_t>(0.05 * 401));
}

TEST_CASE("detection_auc matches pairwise counting") {
  CHECK(detection_auc(std::vector<double>{1.0, 2.0}, std::vector<double>{3.0, 4.0}) == 1.0);
  CHECK(detection_auc(std::vector<double>{3.0, 4.0}, std::vector<double>{1.0, 2.0}) == 0.0);
  CHECK(detection_auc(std::vector<double>{1.0}, std::vector<double>{1.0}) == 0.5);
  RngStream rng(9);
  std::vector<double> nat(300), adv(250);
  for (double& x : nat) x = std::round(10.0 * rng.normal()) / 10.0;
  for (double& x : adv) x = std::round(10.0 * (0.7 + rng.normal())) / 10.0;
  CHECK(detection_auc(nat, adv) == doctest::Approx(brute_auc(nat, adv)).epsilon(1e-12));
}
