#ifndef ADP_CERTIFY_HPP
#define ADP_CERTIFY_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adp/numerics.hpp"

namespace adp {

// Any input -> label map being smoothed.
using LabelFn = std::function<std::size_t(std::span<const double>)>;

struct SmoothingEstimate {
  std::size_t top = 0;     // A
  std::size_t runner = 0;  // B
  double p_top = 0.0;
  double p_runner = 0.0;
  std::size_t n = 0;
  std::vector<std::size_t> counts;  // per class label seen
};

// Empirical label frequencies of pipeline(x + eps), eps ~ N(0, sigma^2 I).
// Sample i uses rng.derive(i), so results do not depend on evaluation order.
SmoothingEstimate estimate_top2(const LabelFn& pipeline, std::span<const double> x, double sigma, std::size_t n,
                                const RngStream& rng);

// R = sigma/2 * (inv_cdf(pA) - inv_cdf(pB)). Requires 0 < pB <= pA < 1.
double certified_radius(double p_top, double p_runner, double sigma);

enum class CertifyMode {
  Empirical,     // raw frequencies
  Conservative,  // pA lowered by the Hoeffding margin sqrt(ln(1/alpha) / (2n))
};

struct CertifyOptions {
  CertifyMode mode = CertifyMode::Empirical;
  double alpha = 0.001;
};

struct CertifiedPoint {
  std::size_t index = 0;
  std::size_t predicted = 0;
  bool correct = false;
  std::optional<double> radius;  // empty = abstain
};

// Clip pA <= 1 - 1/(2n) and pB >= 1/(2n), then evaluate the radius. Abstains
// when the top-2 labels tie or the adjusted pA does not exceed pB.
std::optional<double> radius_from_estimate(const SmoothingEstimate& est, double sigma, const CertifyOptions& opts = {});

CertifiedPoint certify_point(const LabelFn& pipeline, std::span<const double> x, std::size_t label,
                             std::size_t index, double sigma, std::size_t n, const RngStream& rng,
                             const CertifyOptions& opts = {});

struct CurvePoint {
  double radius = 0.0;
  double certified_accuracy = 0.0;
};

// Fraction of points whose smoothed label is correct with R >= r, per r.
std::vector<CurvePoint> accuracy_curve(const std::vector<CertifiedPoint>& points, std::span<const double> radii);

// Certifies every row (point i on rng.derive(i)), then builds the curve.
std::vector<CurvePoint> certified_accuracy_curve(const LabelFn& pipeline, const Matrix& features,
                                                 std::span<const std::size_t> labels, double sigma, std::size_t n,
                                                 std::span<const double> radii, const RngStream& rng,
                                                 const CertifyOptions& opts = {},
                                                 std::vector<CertifiedPoint>* points_out = nullptr);

}  // namespace adp

#endif  // ADP_CERTIFY_HPP
