#include "rxn/nn/checkpoint.hpp"

#include "rxn/io.hpp"
#include "rxn/random.hpp"

namespace rxn::nn {

namespace {
constexpr std::string_view kMagic = "RXNR";
constexpr std::size_t kHeaderBytes = 4 + 4 + 5 * 4 + 8 + 8;
}  // namespace

std::string serialize_checkpoint(const Model<float>& model) {
  const auto& c = model.config;
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.embed_dim));
  w.u32(static_cast<std::uint32_t>(c.recurrent_hidden));
  w.u32(static_cast<std::uint32_t>(c.attention_heads));
  w.u32(static_cast<std::uint32_t>(c.n_labels));
  w.u32(static_cast<std::uint32_t>(c.max_len));
  w.u64(c.seed);
  w.u64(model.params.parameter_count());
  model.params.visit([&](const char*, const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) w.f32(t.data()[i]);
  });
  std::string out = w.data();
  ByteWriter tail;
  tail.u64(fnv1a(out));
  out += tail.data();
  return out;
}

Model<float> deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes + 8) throw Error(ErrorCode::Truncated, "checkpoint shorter than its header");
  ByteReader r(bytes);
  if (r.bytes(4) != kMagic) throw Error(ErrorCode::BadMagic, "not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                                std::to_string(kCheckpointVersion));
  }
  const auto body = bytes.substr(0, bytes.size() - 8);
  ByteReader tail(bytes.substr(bytes.size() - 8));
  if (tail.u64() != fnv1a(body)) throw Error(ErrorCode::ChecksumMismatch, "checkpoint checksum mismatch");

  ModelConfig cfg;
  cfg.embed_dim = static_cast<int>(r.u32());
  cfg.recurrent_hidden = static_cast<int>(r.u32());
  cfg.attention_heads = static_cast<int>(r.u32());
  cfg.n_labels = static_cast<int>(r.u32());
  cfg.max_len = static_cast<int>(r.u32());
  cfg.seed = r.u64();
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ShapeMismatch, std::string("checkpoint config invalid: ") + e.what());
  }
  const auto count = r.u64();
  Model<float> model{cfg, zero_params<float>(cfg)};
  const auto expected = model.params.parameter_count();
  if (count != expected || r.remaining() != 8 + 4 * expected) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint payload does not match its config (" +
                                              std::to_string(count) + " stored, " + std::to_string(expected) +
                                              " expected)");
  }
  model.params.visit([&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = r.f32();
  });
  return model;
}

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(model));
}

Model<float> load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace rxn::nn
