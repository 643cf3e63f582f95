#include "adp/certify.hpp"

#include <algorithm>
#include <cmath>

#include "adp/errors.hpp"

namespace adp {

SmoothingEstimate estimate_top2(const LabelFn& pipeline, std::span<const double> x, double sigma, std::size_t n,
                                const RngStream& rng) {
  if (n < 2) throw DomainError("estimate_top2: n must be >= 2");
  if (!(sigma >= 0.0)) throw DomainError("estimate_top2: sigma must be >= 0");
  SmoothingEstimate est;
  est.n = n;
  Vector noisy(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    RngStream sub = rng.derive(i);
    const Vector noise = gaussian_sample(sub, x.size(), 0.0, sigma);
    for (std::size_t d = 0; d < x.size(); ++d) noisy[d] = x[d] + noise[d];
    const std::size_t label = pipeline(noisy);
    if (label >= est.counts.size()) est.counts.resize(label + 1, 0);
    ++est.counts[label];
  }
  if (est.counts.size() < 2) est.counts.resize(2, 0);
  // Highest count first, lowest label on ties.
  std::vector<std::size_t> order(est.counts.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return est.counts[a] > est.counts[b]; });
  est.top = order[0];
  est.runner = order[1];
  est.p_top = static_cast<double>(est.counts[est.top]) / static_cast<double>(n);
  est.p_runner = static_cast<double>(est.counts[est.runner]) / static_cast<double>(n);
  return est;
}

double certified_radius(double p_top, double p_runner, double sigma) {
  if (!(p_runner > 0.0 && p_runner <= p_top && p_top < 1.0))
    throw DomainError("certified_radius requires 0 < pB <= pA < 1");
  if (!(sigma >= 0.0)) throw DomainError("certified_radius: sigma must be >= 0");
  if (p_top == p_runner) return 0.0;
  return sigma * (0.5 * (inv_std_normal_cdf(p_top) - inv_std_normal_cdf(p_runner)));
}

std::optional<double> radius_from_estimate(const SmoothingEstimate& est, double sigma, const CertifyOptions& opts) {
  if (est.p_top == est.p_runner) return std::nullopt;
  const double floor = 1.0 / (2.0 * static_cast<double>(est.n));
  double pa = std::min(est.p_top, 1.0 - floor);
  const double pb = std::max(est.p_runner, floor);
  if (opts.mode == CertifyMode::Conservative) {
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw DomainError("conservative certification needs alpha in (0,1)");
    pa -= std::sqrt(std::log(1.0 / opts.alpha) / (2.0 * static_cast<double>(est.n)));
  }
  if (!(pa > pb)) return std::nullopt;
  return certified_radius(pa, pb, sigma);
}

CertifiedPoint certify_point(const LabelFn& pipeline, std::span<const double> x, std::size_t label,
                             std::size_t index, double sigma, std::size_t n, const RngStream& rng,
                             const CertifyOptions& opts) {
  const SmoothingEstimate est = estimate_top2(pipeline, x, sigma, n, rng);
  CertifiedPoint pt;
  pt.index = index;
  pt.predicted = est.top;
  pt.radius = radius_from_estimate(est, sigma, opts);
  pt.correct = pt.radius.has_value() && est.top == label;
  return pt;
}

std::vector<CurvePoint> accuracy_curve(const std::vector<CertifiedPoint>& points, std::span<const double> radii) {
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw DomainError("certified curve radii must be increasing");
  std::vector<CurvePoint> curve;
  for (double r : radii) {
    std::size_t hit = 0;
    for (const auto& p : points) hit += p.correct && *p.radius >= r;
    curve.push_back({r, points.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(points.size())});
  }
  return curve;
}

std::vector<CurvePoint> certified_accuracy_curve(const LabelFn& pipeline, const Matrix& features,
                                                 std::span<const std::size_t> labels, double sigma, std::size_t n,
                                                 std::span<const double> radii, const RngStream& rng,
                                                 const CertifyOptions& opts, std::vector<CertifiedPoint>* points_out) {
  if (labels.size() != features.rows) throw ShapeError("certified_accuracy_curve: label count mismatch");
  std::vector<CertifiedPoint> points;
  for (std::size_t i = 0; i < features.rows; ++i)
    points.push_back(certify_point(pipeline, features.row(i), labels[i], i, sigma, n, rng.derive(i), opts));
  auto curve = accuracy_curve(points, radii);
  if (points_out) *points_out = std::move(points);
  return curve;
}

}  // namespace adp
