#include <doctest.h>

#include <cmath>

#include "adp/certify.hpp"
#include "adp/errors.hpp"
#include "oracles.hpp"

using namespace adp;

TEST_CASE("estimate_top2: constant pipeline and determinism") {
  const LabelFn three = [](std::span<const double>) -> std::size_t { return 3; };
  const SmoothingEstimate e = estimate_top2(three, Vector{0.1, 0.2}, 0.25, 100, RngStream(1));
  CHECK(e.top == 3);
  CHECK(e.p_top == 1.0);
  CHECK(e.p_runner == 0.0);
  CHECK(e.n == 100);

  const LabelFn sign = [](std::span<const double> v) -> std::size_t { return v[0] > 0 ? 1 : 0; };
  const SmoothingEstimate a = estimate_top2(sign, Vector{0.1}, 0.5, 200, RngStream(7));
  const SmoothingEstimate b = estimate_top2(sign, Vector{0.1}, 0.5, 200, RngStream(7));
  CHECK(a.counts == b.counts);
  CHECK(a.p_top >= a.p_runner);
  CHECK(a.p_top + a.p_runner <= 1.0);
  CHECK(a.p_top == doctest::Approx(static_cast<double>(a.counts[a.top]) / 200.0));
}

TEST_CASE("estimate_top2 matches Phi(x / sigma) for a 1-D threshold") {
  const LabelFn sign = [](std::span<const double> v) -> std::size_t { return v[0] > 0 ? 1 : 0; };
  const std::size_t n = 10000;
  for (double x : {0.05, 0.1, 0.2, 0.4}) {
    const SmoothingEstimate e = estimate_top2(sign, Vector{x}, 0.25, n, RngStream(3));
    CHECK(e.top == 1);
    CHECK(std::abs(e.p_top - oracle::phi(x / 0.25)) < 3.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("certified_radius") {
  const double expect = 0.125 * (oracle::phi_inv(0.9) - oracle::phi_inv(0.1));
  CHECK(std::abs(certified_radius(0.9, 0.1, 0.25) - expect) < 1e-9);
  // The quantile difference gives 0.3203879; 0.320364 is 2.4e-5 away.
  CHECK(certified_radius(0.9, 0.1, 0.25) == doctest::Approx(0.3203879).epsilon(1e-6));
  CHECK(certified_radius(0.3, 0.3, 0.25) == 0.0);
  CHECK_THROWS_AS(certified_radius(0.1, 0.9, 0.25), DomainError);
  CHECK_THROWS_AS(certified_radius(1.0, 0.1, 0.25), DomainError);
  CHECK_THROWS_AS(certified_radius(0.9, 0.0, 0.25), DomainError);

  // Exactly linear in sigma for power-of-two factors; monotone in pA and pB.
  for (int i = 1; i <= 10; ++i) {
    for (int j = 1; j <= 10; ++j) {
      const double pa = 0.5 + 0.049 * i, pb = 0.0495 * j * (1.0 - pa) / 0.5;
      if (pb > pa) continue;
      const double r = certified_radius(pa, pb, 0.25);
      for (double k : {0.5, 2.0, 4.0, 8.0}) REQUIRE(certified_radius(pa, pb, 0.25 * k) == k * r);
      REQUIRE(r >= 0.0);
      REQUIRE(certified_radius(std::min(pa + 0.001, 0.999), pb, 0.25) >= r);
      REQUIRE(certified_radius(pa, pb * 0.9, 0.25) >= r);
    }
  }
}

TEST_CASE("radius_from_estimate: clipping, abstention, conservative mode") {
  SmoothingEstimate all;
  all.top = 2;
  all.runner = 0;
  all.p_top = 1.0;
  all.p_runner = 0.0;
  all.n = 100;
  const auto r = radius_from_estimate(all, 0.25);
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(0.125 * (oracle::phi_inv(1.0 - 0.005) - oracle::phi_inv(0.005))).epsilon(1e-8));

  SmoothingEstimate tie = all;
  tie.p_top = tie.p_runner = 0.5;
  CHECK_FALSE(radius_from_estimate(tie, 0.25).has_value());

  SmoothingEstimate some = all;
  some.p_top = 0.8;
  some.p_runner = 0.2;
  CertifyOptions cons{CertifyMode::Conservative, 0.001};
  const double margin = std::sqrt(std::log(1000.0) / 200.0);
  const auto rc = radius_from_estimate(some, 0.25, cons);
  REQUIRE(rc.has_value());
  CHECK(*rc == doctest::Approx(certified_radius(0.8 - margin, 0.2, 0.25)).epsilon(1e-12));
  CHECK(*rc < *radius_from_estimate(some, 0.25));
}

TEST_CASE("certified accuracy curve") {
  const LabelFn correct = [](std::span<const double>) -> std::size_t { return 1; };
  Matrix feats(5, 2, 0.0);
  const std::vector<std::size_t> labels(5, 1);
  const std::vector<double> radii{0.0, 0.2, 0.4, 0.6, 0.64, 0.65, 1.0};
  const auto curve = certified_accuracy_curve(correct, feats, labels, 0.25, 100, radii, RngStream(1));
  // Clipped pA = 0.995 gives R = 0.25 * inv_cdf(0.995) ~ 0.64396.
  const double r_max = 0.25 * oracle::phi_inv(0.995);
  for (const CurvePoint& c : curve) CHECK(c.certified_accuracy == (c.radius <= r_max ? 1.0 : 0.0));

  const LabelFn sign = [](std::span<const double> v) -> std::size_t { return v[0] > 0 ? 1 : 0; };
  Matrix pts(40, 1);
  std::vector<std::size_t> y(40);
  RngStream rng(2);
  for (std::size_t i = 0; i < 40; ++i) {
    pts(i, 0) = rng.normal() * 0.4;
    y[i] = i % 2;
  }
  std::vector<CertifiedPoint> points;
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
  const auto c2 = certified_accuracy_curve(sign, pts, y, 0.25, 200, grid, RngStream(4), {}, &points);
  REQUIRE(points.size() == 40);
  double clean = 0.0;
  for (const auto& p : points) clean += p.correct && p.radius.has_value();
  CHECK(c2.front().certified_accuracy == doctest::Approx(clean / 40.0));
  for (std::size_t i = 0; i < c2.size(); ++i) {
    CHECK(c2[i].certified_accuracy >= 0.0);
    CHECK(c2[i].certified_accuracy <= 1.0);
    if (i) CHECK(c2[i].certified_accuracy <= c2[i - 1].certified_accuracy);
  }
  for (std::size_t i = 0; i < points.size(); ++i) CHECK(points[i].index == i);
}
