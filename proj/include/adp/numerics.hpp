#ifndef ADP_NUMERICS_HPP
#define ADP_NUMERICS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace adp {

using Vector = std::vector<double>;

// Dense row-major matrix. Rows are samples wherever a Matrix holds data.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Counter-based random stream (Philox4x32-10).
///
/// The generator key is the 64-bit seed and the upper half of the 128-bit
/// counter is the stream id, so streams with different ids never overlap.
/// Sub-streams are derived, never shared: an RngStream has a single owner.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent stream for a child task. Same (parent, id) gives the same stream.
  RngStream derive(std::uint64_t id) const;

  std::uint64_t next_u64();
  // Uniform in the open interval (0, 1).
  double uniform();
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  // +1 or -1 with equal probability.
  double rademacher();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint32_t block_[4] = {0, 0, 0, 0};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct BoxDomain {
  double lo = 0.0;
  double hi = 1.0;
  bool enabled = false;

  static BoxDomain none() { return {0.0, 1.0, false}; }
  static BoxDomain unit() { return {0.0, 1.0, true}; }

  void validate() const;
  void clamp(std::span<double> x) const;
  bool contains(std::span<const double> x) const;
};

enum class NormKind { Linf, L2 };

struct ThreatModel {
  NormKind norm = NormKind::Linf;
  double epsilon = 8.0 / 255.0;

  void validate() const;
};

Vector gaussian_sample(RngStream& rng, std::size_t n, double mean, double std);

double std_normal_cdf(double z);
// Throws DomainError unless 0 < p < 1.
double inv_std_normal_cdf(double p);

double l2_norm(std::span<const double> x);
double l2_distance(std::span<const double> a, std::span<const double> b);
double linf_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

// Rows used for O(n^2) pairwise statistics: all rows when n <= cap, otherwise
// a seeded uniform subsample of cap rows (sorted indices).
std::vector<std::size_t> pairwise_subsample(std::size_t n, std::size_t cap = 2000, std::uint64_t seed = 0);

// Lower median of all pairwise L2 distances, divided by sqrt(D).
double median_heuristic_sigma(const Matrix& data);

// Projection onto {v : |v - center| <= eps} intersected with the box.
// Idempotent bit-for-bit.
Vector project_ball(std::span<const double> x, std::span<const double> center, const ThreatModel& threat,
                    const BoxDomain& box);

}  // namespace adp

#endif  // ADP_NUMERICS_HPP
