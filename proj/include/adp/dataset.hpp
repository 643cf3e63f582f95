#ifndef ADP_DATASET_HPP
#define ADP_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "adp/numerics.hpp"

namespace adp {

struct Dataset {
  Matrix features;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  BoxDomain box;
  std::string name;
  std::uint64_t seed = 0;

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
  void validate() const;
};

// k Gaussian blobs, centers on a seeded sphere of radius `separation`,
// n_per_blob rows each, rows grouped by label.
Dataset gen_synthetic(std::size_t k, std::size_t dim, std::size_t n_per_blob, double separation, double noise_std,
                      std::uint64_t seed);

// Blob centers used by gen_synthetic for the same (k, dim, separation, seed).
Matrix synthetic_centers(std::size_t k, std::size_t dim, double separation, std::uint64_t seed);

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

// Seeded shuffle; the last test_fraction of rows become the test set.
DatasetSplit split_dataset(const Dataset& ds, double test_fraction, std::uint64_t seed);

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows);

// Binary dataset file: "ADPD", u32 version, u64 rows, u64 cols, u64 classes,
// u8 box flag, f64 lo, f64 hi, u64 seed, u32 name length + bytes,
// f64 features row-major, u32 labels. Little-endian.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// IDX image (magic 0x00000803) and label (0x00000801) files, big-endian.
// Images are flattened; pixels scaled to [0,1] when normalize is set.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, bool normalize = true);

}  // namespace adp

#endif  // ADP_DATASET_HPP
