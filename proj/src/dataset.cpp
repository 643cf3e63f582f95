#include "adp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "adp/errors.hpp"
#include "binary_io.hpp"

namespace adp {

namespace {

constexpr char kDatasetMagic[4] = {'A', 'D', 'P', 'D'};
constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

void Dataset::validate() const {
  if (labels.size() != features.rows) throw ShapeError("dataset: label count differs from row count");
  for (std::size_t y : labels)
    if (y >= classes) throw IndexError("dataset: label " + std::to_string(y) + " >= class count");
  for (double v : features.data)
    if (!std::isfinite(v)) throw DomainError("dataset: non-finite feature");
  box.validate();
  if (box.enabled)
    for (std::size_t i = 0; i < features.rows; ++i)
      if (!box.contains(features.row(i))) throw DomainError("dataset: row " + std::to_string(i) + " outside box");
}

Matrix synthetic_centers(std::size_t k, std::size_t dim, double separation, std::uint64_t seed) {
  RngStream rng = RngStream(seed).derive(0xCE);
  Matrix centers(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    auto row = centers.row(c);
    double norm = 0.0;
    while (!(norm > 0.0)) {
      for (double& v : row) v = rng.normal();
      norm = l2_norm(row);
    }
    for (double& v : row) v *= separation / norm;
  }
  return centers;
}

Dataset gen_synthetic(std::size_t k, std::size_t dim, std::size_t n_per_blob, double separation, double noise_std,
                      std::uint64_t seed) {
  if (k < 2) throw DomainError("gen_synthetic: need at least 2 blobs");
  if (dim < 1) throw DomainError("gen_synthetic: dimension must be >= 1");
  if (n_per_blob < 1) throw DomainError("gen_synthetic: n_per_blob must be >= 1");
  if (!(separation >= 0.0) || !(noise_std >= 0.0)) throw DomainError("gen_synthetic: scales must be >= 0");
  Dataset ds;
  ds.features = Matrix(k * n_per_blob, dim);
  ds.classes = k;
  ds.name = "blobs";
  ds.seed = seed;
  const Matrix centers = synthetic_centers(k, dim, separation, seed);
  RngStream rng = RngStream(seed).derive(0xDA7A);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n_per_blob; ++i) {
      auto row = ds.features.row(c * n_per_blob + i);
      const Vector noise = gaussian_sample(rng, dim, 0.0, noise_std);
      for (std::size_t d = 0; d < dim; ++d) row[d] = centers(c, d) + noise[d];
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.features = Matrix(rows.size(), ds.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = ds.features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(ds.labels[rows[i]]);
  }
  out.classes = ds.classes;
  out.box = ds.box;
  out.name = ds.name;
  out.seed = ds.seed;
  return out;
}

DatasetSplit split_dataset(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw DomainError("split_dataset: test_fraction in [0,1)");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng = RngStream(seed).derive(0x5B117);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> test(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
  return {subset(ds, train), subset(ds, test)};
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  io::Writer w;
  w.bytes(kDatasetMagic, 4);
  w.u32(kDatasetVersion);
  w.u64(ds.features.rows);
  w.u64(ds.features.cols);
  w.u64(ds.classes);
  w.u8(ds.box.enabled ? 1 : 0);
  w.f64(ds.box.lo);
  w.f64(ds.box.hi);
  w.u64(ds.seed);
  w.str(ds.name);
  for (double v : ds.features.data) w.f64(v);
  for (std::size_t y : ds.labels) w.u32(static_cast<std::uint32_t>(y));
  w.save(path);
}

Dataset load_dataset(const std::string& path) {
  io::Reader r = io::Reader::open(path);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kDatasetMagic)) throw FormatError(path + ": not a dataset file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion)
    throw FormatError(path + ": dataset version " + std::to_string(version) + ", reader supports " +
                      std::to_string(kDatasetVersion));
  Dataset ds;
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  ds.classes = r.u64();
  ds.box.enabled = r.u8() != 0;
  ds.box.lo = r.f64();
  ds.box.hi = r.f64();
  ds.seed = r.u64();
  ds.name = r.str();
  if (rows * cols * 8 + rows * 4 != r.remaining()) throw FormatError(path + ": payload size does not match header");
  ds.features = Matrix(rows, cols);
  for (double& v : ds.features.data) v = r.f64();
  for (std::uint64_t i = 0; i < rows; ++i) ds.labels.push_back(r.u32());
  ds.validate();
  return ds;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, bool normalize) {
  io::Reader img = io::Reader::open(images_path);
  const std::uint32_t img_magic = img.u32_be();
  if (img_magic != kIdxImageMagic)
    throw FormatError(images_path + ": image magic " + hex(img_magic) + ", expected " + hex(kIdxImageMagic));
  const std::uint32_t n_images = img.u32_be();
  const std::uint32_t height = img.u32_be();
  const std::uint32_t width = img.u32_be();
  if (height == 0 || width == 0) throw FormatError(images_path + ": zero image dimension");
  const std::uint64_t pixels = std::uint64_t{height} * width;
  if (img.remaining() < n_images * pixels)
    throw TruncationError(images_path + ": truncated, payload has " + std::to_string(img.remaining()) + " bytes, header implies " +
                          std::to_string(n_images * pixels));
  if (img.remaining() != n_images * pixels)
    throw FormatError(images_path + ": payload has " + std::to_string(img.remaining()) + " bytes, header implies " +
                      std::to_string(n_images * pixels));

  io::Reader lab = io::Reader::open(labels_path);
  const std::uint32_t lab_magic = lab.u32_be();
  if (lab_magic != kIdxLabelMagic)
    throw FormatError(labels_path + ": label magic " + hex(lab_magic) + ", expected " + hex(kIdxLabelMagic));
  const std::uint32_t n_labels = lab.u32_be();
  if (lab.remaining() < n_labels)
    throw TruncationError(labels_path + ": truncated, payload has " + std::to_string(lab.remaining()) +
                          " bytes, header implies " + std::to_string(n_labels));
  if (lab.remaining() != n_labels)
    throw FormatError(labels_path + ": payload has " + std::to_string(lab.remaining()) + " bytes, header implies " +
                      std::to_string(n_labels));
  if (n_images != n_labels)
    throw MismatchError("image count " + std::to_string(n_images) + " != label count " + std::to_string(n_labels));

  Dataset ds;
  ds.name = "idx";
  ds.features = Matrix(n_images, pixels);
  const double scale = normalize ? 1.0 / 255.0 : 1.0;
  for (double& v : ds.features.data) v = static_cast<double>(img.u8()) * scale;
  std::size_t max_label = 0;
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    ds.labels.push_back(lab.u8());
    max_label = std::max(max_label, ds.labels.back());
  }
  ds.classes = n_labels ? max_label + 1 : 0;
  ds.box = normalize ? BoxDomain::unit() : BoxDomain{0.0, 255.0, true};
  return ds;
}

}  // namespace adp
