#include "adp/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "adp/errors.hpp"
#include "binary_io.hpp"

namespace adp {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'P', 'W'};

const char* activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "softplus"; }

Activation parse_activation(const std::string& s, const std::string& what) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  throw FormatError(what + ": unknown activation '" + s + "'");
}

Checkpoint decode(io::Reader& r) {
  const std::string& what = r.what();
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError(what + ": bad magic, not an ADPW checkpoint");
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion)
    throw FormatError(what + ": checkpoint version " + std::to_string(version) + " is not supported (reader version " +
                      std::to_string(Checkpoint::kVersion) + ")");
  Checkpoint ckpt;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError(what + ": unknown model kind " + std::to_string(kind));
  ckpt.kind = static_cast<ModelKind>(kind);
  const std::uint32_t layers = r.u32();
  if (layers == 0 || layers > 1024) throw FormatError(what + ": implausible layer count " + std::to_string(layers));
  MlpSpec spec;
  for (std::uint32_t i = 0; i <= layers; ++i) spec.dims.push_back(r.u32());
  try {
    spec.validate();
  } catch (const ShapeError& e) {
    throw FormatError(what + ": " + e.what());
  }
  std::vector<double> params(spec.param_count());
  if (r.remaining() < params.size() * 8) throw TruncationError(what + ": truncated parameter block");
  for (double& p : params) p = r.f64();
  const std::string meta_text = r.str();
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after metadata");
  try {
    ckpt.metadata = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": metadata is not valid JSON (" + e.what() + ")");
  }
  spec.activation = parse_activation(ckpt.metadata.value("activation", "tanh"), what);
  ckpt.model = MlpModel(std::move(spec), std::move(params));
  return ckpt;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const MlpSpec& spec = ckpt.model.spec();
  io::Writer w;
  w.bytes(kMagic, 4);
  w.u32(Checkpoint::kVersion);
  w.u8(static_cast<std::uint8_t>(ckpt.kind));
  w.u32(static_cast<std::uint32_t>(spec.layer_count()));
  for (std::size_t d : spec.dims) w.u32(static_cast<std::uint32_t>(d));
  for (double p : ckpt.model.params()) w.f64(p);
  nlohmann::json meta = ckpt.metadata;
  meta["activation"] = activation_name(spec.activation);
  w.str(meta.dump());
  return std::string(w.buffer().begin(), w.buffer().end());
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& what) {
  io::Reader r(std::vector<char>(bytes.begin(), bytes.end()), what);
  return decode(r);
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  io::Reader r = io::Reader::open(path);
  return decode(r);
}

}  // namespace adp
