#include "adp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adp/errors.hpp"

namespace adp {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

void philox4x32_10(std::uint32_t ctr[4], std::uint32_t key0, std::uint32_t key1) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    const std::uint32_t next[4] = {hi1 ^ ctr[1] ^ key0, lo1, hi0 ^ ctr[3] ^ key1, lo0};
    std::copy(next, next + 4, ctr);
    key0 += kPhiloxW0;
    key1 += kPhiloxW1;
  }
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Lower-tail inverse CDF for 0 < p <= 0.5.
double inv_cdf_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Halley refinement against the erfc-based CDF.
  for (int i = 0; i < 2; ++i) {
    const double e = std_normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace

RngStream RngStream::derive(std::uint64_t id) const {
  return RngStream(seed_, splitmix64(stream_ ^ splitmix64(id + 0x632BE59BD9B4E019ull)));
}

void RngStream::refill() {
  block_[0] = static_cast<std::uint32_t>(counter_);
  block_[1] = static_cast<std::uint32_t>(counter_ >> 32);
  block_[2] = static_cast<std::uint32_t>(stream_);
  block_[3] = static_cast<std::uint32_t>(stream_ >> 32);
  philox4x32_10(block_, static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32));
  ++counter_;
  used_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (used_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(block_[used_]) << 32) | block_[used_ + 1];
  used_ += 2;
  return v;
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw DomainError("uniform_index: n must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double RngStream::rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

void BoxDomain::validate() const {
  if (enabled && !(lo < hi)) throw DomainError("box domain requires lo < hi");
}

void BoxDomain::clamp(std::span<double> x) const {
  if (!enabled) return;
  for (double& v : x) v = std::clamp(v, lo, hi);
}

bool BoxDomain::contains(std::span<const double> x) const {
  if (!enabled) return true;
  return std::all_of(x.begin(), x.end(), [&](double v) { return v >= lo && v <= hi; });
}

void ThreatModel::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("threat model epsilon must be finite and >= 0");
}

Vector gaussian_sample(RngStream& rng, std::size_t n, double mean, double std) {
  if (!(std >= 0.0)) throw DomainError("gaussian_sample: std must be >= 0");
  Vector out(n);
  // Draws are consumed even when std == 0 so stream positions line up.
  for (double& v : out) v = mean + std * rng.normal();
  if (std == 0.0) std::fill(out.begin(), out.end(), mean);
  return out;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double inv_std_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("inv_std_normal_cdf: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return inv_cdf_lower(p);
  return -inv_cdf_lower(1.0 - p);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<std::size_t> pairwise_subsample(std::size_t n, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n <= cap) return idx;
  RngStream rng(seed, 0x5355425341ull);
  // Partial Fisher-Yates: first cap entries become a uniform subset.
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double median_heuristic_sigma(const Matrix& data) {
  if (data.rows < 2) throw InsufficientData("median_heuristic_sigma needs at least 2 rows");
  const auto rows = pairwise_subsample(data.rows);
  std::vector<double> dists;
  dists.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b) dists.push_back(l2_distance(data.row(rows[a]), data.row(rows[b])));
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>((dists.size() - 1) / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid / std::sqrt(static_cast<double>(data.cols));
}

Vector project_ball(std::span<const double> x, std::span<const double> center, const ThreatModel& threat,
                    const BoxDomain& box) {
  if (x.size() != center.size()) throw ShapeError("project_ball: dimension mismatch");
  Vector out(x.begin(), x.end());
  const double eps = threat.epsilon;
  if (threat.norm == NormKind::Linf) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], center[i] - eps, center[i] + eps);
  } else {
    const double norm = l2_distance(out, center);
    if (norm > eps) {
      double scale = eps / norm;
      Vector trial(out.size());
      // Shrink until the rounded result is inside, so a second call is a no-op.
      for (;;) {
        for (std::size_t i = 0; i < out.size(); ++i) trial[i] = center[i] + (x[i] - center[i]) * scale;
        if (l2_distance(trial, center) <= eps) break;
        scale = std::nextafter(scale, 0.0);
      }
      out = std::move(trial);
    }
  }
  box.clamp(out);
  return out;
}

}  // namespace adp
