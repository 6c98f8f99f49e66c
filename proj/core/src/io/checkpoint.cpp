#include "semsplat/io/checkpoint.hpp"

#include <cstring>

#include "io/binary.hpp"

namespace semsplat::io {

std::vector<std::uint8_t> encode_checkpoint(const Scene<float>& scene) {
  scene.validate();
  const auto& g = scene.gaussians;
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  w.u64(g.size());
  w.u32(static_cast<std::uint32_t>(g.sh_degree()));
  w.u32(static_cast<std::uint32_t>(scene.dictionary.size()));
  for (const auto& label : scene.dictionary.entries()) w.string(label);
  const EmbeddingTable& e = scene.embeddings;
  w.u32(static_cast<std::uint32_t>(e.dim));
  w.u32(static_cast<std::uint32_t>(e.entry_count()));
  w.u32(static_cast<std::uint32_t>(e.negative_count()));
  for (const auto& s : e.negative_phrases) w.string(s);
  w.f32s(e.entry_vectors);
  w.f32s(e.negative_vectors);
  for (float c : scene.background) w.f32(c);
  for (ParamGroup group : kParamGroups) w.f32s(g.group(group));
  w.f32s(scene.head.weight);
  w.f32s(scene.head.bias);
  w.u64(w.size());
  return std::move(w.buffer());
}

Scene<float> decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& file) {
  detail::ByteReader r(bytes, file);
  if (r.remaining() < sizeof(kCheckpointMagic) ||
      std::memcmp(r.bytes(sizeof(kCheckpointMagic), "magic").data(), kCheckpointMagic,
                  sizeof(kCheckpointMagic)) != 0) {
    r.fail(ErrorCode::kBadMagic, "not a checkpoint file", 0);
  }
  // The footer is checked first so a truncated file reports as such.
  if (bytes.size() < sizeof(kCheckpointMagic) + 8) r.fail(ErrorCode::kTruncated, "file too short");
  std::uint64_t footer = 0;
  for (int i = 0; i < 8; ++i) footer |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
  if (footer != bytes.size() - 8) {
    r.fail(ErrorCode::kLengthMismatch,
           "footer records " + std::to_string(footer) + " bytes but " +
               std::to_string(bytes.size() - 8) + " precede it",
           bytes.size() - 8);
  }
  detail::ByteReader body(bytes.first(bytes.size() - 8), file);
  body.bytes(sizeof(kCheckpointMagic), "magic");

  const std::uint32_t version = body.u32("version");
  if (version != kCheckpointVersion) {
    body.fail(ErrorCode::kUnsupportedVersion, "checkpoint version " + std::to_string(version), 9);
  }
  const std::uint64_t n = body.u64("gaussian count");
  if (n > body.remaining()) {
    body.fail(ErrorCode::kTruncated, "gaussian count " + std::to_string(n) + " exceeds the file size", 13);
  }
  const std::uint32_t degree = body.u32("sh degree");
  if (degree > static_cast<std::uint32_t>(kMaxShDegree)) {
    body.fail(ErrorCode::kParse, "sh degree " + std::to_string(degree) + " exceeds 3", 21);
  }
  const std::uint32_t entries = body.u32("dictionary size");
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < entries; ++i) labels.push_back(body.string("dictionary label"));
  SemanticDictionary dict;
  try {
    dict = SemanticDictionary(labels);
  } catch (const Error& e) {
    body.fail(e.code(), e.what());
  }

  Scene<float> scene(static_cast<int>(degree), std::move(dict));
  EmbeddingTable& e = scene.embeddings;
  const std::uint32_t dim = body.u32("embedding dim");
  const std::uint32_t rows = body.u32("embedding rows");
  const std::uint32_t negs = body.u32("negative count");
  e.dim = static_cast<int>(dim);
  for (std::uint32_t i = 0; i < negs; ++i) e.negative_phrases.push_back(body.string("negative phrase"));
  auto read_floats = [&](std::vector<float>& out, std::uint64_t count, const char* what) {
    if (count > body.remaining() / 4) {
      body.fail(ErrorCode::kTruncated, std::string(what) + " needs " + std::to_string(count) +
                                           " floats, " + std::to_string(body.remaining()) +
                                           " bytes remain");
    }
    out.resize(count);
    body.f32s(out, what);
  };
  read_floats(e.entry_vectors, static_cast<std::uint64_t>(rows) * dim, "embedding rows");
  read_floats(e.negative_vectors, static_cast<std::uint64_t>(negs) * dim, "negative rows");
  for (float& c : scene.background) c = body.f32("background");

  auto& g = scene.gaussians;
  for (ParamGroup group : kParamGroups) {
    read_floats(g.group(group), n * g.stride(group), param_group_name(group));
  }
  const std::uint64_t classes = static_cast<std::uint64_t>(entries) + 1;
  read_floats(scene.head.weight, classes * kSemanticDim, "head weight");
  read_floats(scene.head.bias, classes, "head bias");
  if (body.remaining() != 0) {
    body.fail(ErrorCode::kLengthMismatch, std::to_string(body.remaining()) + " unexpected bytes");
  }
  try {
    scene.validate();
    if (!e.empty()) e.validate(scene.dictionary.size());
  } catch (const Error& err) {
    throw FormatError(err.code(), file, "contents", err.what());
  }
  return scene;
}

void save_checkpoint(const Scene<float>& scene, const std::string& path) {
  detail::write_file_atomic(path, encode_checkpoint(scene));
}

Scene<float> load_checkpoint(const std::string& path) {
  return decode_checkpoint(detail::read_file_bytes(path), path);
}

}  // namespace semsplat::io
