#ifndef ADP_CHECKPOINT_HPP
#define ADP_CHECKPOINT_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "adp/models.hpp"

namespace adp {

enum class ModelKind : std::uint8_t { Score = 0, Classifier = 1 };

/// On-disk model, little-endian:
///   "ADPW" | u32 version (1) | u8 kind | u32 layer count m | u32 dims[m+1]
///   | f64 params (layer-major, W then b) | u32 length + UTF-8 metadata JSON.
/// The metadata carries the activation and training details (schedule, seed, epochs).
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelKind kind = ModelKind::Score;
  MlpModel model;
  nlohmann::json metadata = nlohmann::json::object();
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& what = "checkpoint");

}  // namespace adp

#endif  // ADP_CHECKPOINT_HPP
