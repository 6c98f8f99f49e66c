#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "semsplat/error.hpp"
#include "semsplat/io/checkpoint.hpp"
#include "semsplat/io/config.hpp"
#include "semsplat/io/dataset_io.hpp"
#include "semsplat/io/embeddings.hpp"
#include "semsplat/io/png.hpp"
#include "temp_dir.hpp"
#include "test_scenes.hpp"

using namespace semsplat;
namespace fs = std::filesystem;

namespace {

EmbeddingTable small_table(int entries, int dim = 4) {
  EmbeddingTable t;
  t.dim = dim;
  for (int i = 0; i < entries; ++i) {
    std::vector<float> v(dim, 0.0f);
    v[i % dim] = 0.6f;
    v[(i + 1) % dim] = 0.8f;
    t.add_entry(v);
  }
  std::vector<float> n(dim, 0.0f);
  n[dim - 1] = 1.0f;
  t.add_negative("object", n);
  t.add_negative("things", normalized(std::vector<float>(dim, 1.0f)));
  return t;
}

Scene<float> checkpoint_scene() {
  auto scene = test::random_scene<float>(12, {.count = 9, .sh_degree = 2, .classes = 3});
  scene.embeddings = small_table(3);
  return scene;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

}  // namespace

TEST(Checkpoint, EncodeDecodeIsBitExact) {
  const auto scene = checkpoint_scene();
  const auto bytes = io::encode_checkpoint(scene);
  const auto back = io::decode_checkpoint(bytes, "mem");
  EXPECT_EQ(back, scene);
  EXPECT_EQ(io::encode_checkpoint(back), bytes);
}

TEST(Checkpoint, SaveLoadFileRoundTrip) {
  test::TempDir dir;
  const auto scene = checkpoint_scene();
  io::save_checkpoint(scene, dir.file("a.ckpt"));
  const auto back = io::load_checkpoint(dir.file("a.ckpt"));
  io::save_checkpoint(back, dir.file("b.ckpt"));
  EXPECT_EQ(test::read_bytes(dir.file("a.ckpt")), test::read_bytes(dir.file("b.ckpt")));
  for (ParamGroup g : kParamGroups) {
    const auto& x = scene.gaussians.group(g);
    const auto& y = back.gaussians.group(g);
    ASSERT_EQ(x.size(), y.size());
    EXPECT_EQ(std::memcmp(x.data(), y.data(), x.size() * sizeof(float)), 0);
  }
  // No temporary siblings are left behind.
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 2);
}

TEST(Checkpoint, HeaderLayout) {
  const auto bytes = io::encode_checkpoint(checkpoint_scene());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 9), "SEMSPLAT1");
  EXPECT_EQ(bytes[9], 1);  // version, little-endian
  EXPECT_EQ(bytes[13], 9);  // gaussian count
  EXPECT_EQ(bytes[21], 2);  // sh degree
  std::uint64_t footer = 0;
  for (int i = 0; i < 8; ++i) footer |= std::uint64_t(bytes[bytes.size() - 8 + i]) << (8 * i);
  EXPECT_EQ(footer, bytes.size() - 8);
}

TEST(Checkpoint, CorruptionsAreNamed) {
  const auto good = io::encode_checkpoint(checkpoint_scene());
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { io::decode_checkpoint(bad_magic, "m"); }), ErrorCode::kBadMagic);

  auto truncated = good;
  truncated.resize(good.size() - 13);
  EXPECT_EQ(code_of([&] { io::decode_checkpoint(truncated, "m"); }), ErrorCode::kLengthMismatch);

  auto version = good;
  version[9] = 2;
  EXPECT_EQ(code_of([&] { io::decode_checkpoint(version, "m"); }), ErrorCode::kUnsupportedVersion);

  auto count = good;
  count[13] = 10;  // claims one more Gaussian than stored
  EXPECT_EQ(code_of([&] { io::decode_checkpoint(count, "m"); }), ErrorCode::kTruncated);

  EXPECT_EQ(code_of([&] { io::load_checkpoint("/nonexistent/x.ckpt"); }), ErrorCode::kMissingFile);
}

TEST(Checkpoint, ErrorsNameFileAndOffset) {
  auto bytes = io::encode_checkpoint(checkpoint_scene());
  bytes[9] = 7;
  try {
    io::decode_checkpoint(bytes, "scene.ckpt");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.file(), "scene.ckpt");
    EXPECT_EQ(e.location(), "offset 9");
  }
}

TEST(Embeddings, RoundTrip) {
  const auto table = small_table(3, 5);
  const std::vector<std::string> labels = {"a", "b", "c"};
  const auto bytes = io::encode_embeddings(labels, table);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), std::string("SEMEMB1\0", 8));
  const auto back = io::decode_embeddings(bytes, "mem");
  EXPECT_EQ(back.entry_labels, labels);
  EXPECT_EQ(back.table, table);
}

TEST(Embeddings, RejectsCorruptions) {
  const auto table = small_table(2);
  const auto good = io::encode_embeddings({"a", "b"}, table);
  auto magic = good;
  magic[6] = 'X';
  EXPECT_EQ(code_of([&] { io::decode_embeddings(magic, "e"); }), ErrorCode::kBadMagic);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { io::decode_embeddings(trailing, "e"); }), ErrorCode::kDimensionMismatch);
  auto truncated = good;
  truncated.resize(good.size() - 4);
  EXPECT_NE(code_of([&] { io::decode_embeddings(truncated, "e"); }), ErrorCode::kIo);

  EmbeddingTable not_unit = table;
  not_unit.entry_vectors[0] *= 1.5f;
  const auto scaled = io::encode_embeddings({"a", "b"}, not_unit);
  EXPECT_EQ(code_of([&] { io::decode_embeddings(scaled, "e"); }), ErrorCode::kNotUnitNorm);
}

TEST(QueryLookupFile, RoundTripAndDuplicates) {
  QueryLookup q;
  q.dim = 3;
  q.vectors["coffee"] = {0, 0.6f, 0.8f};
  q.vectors["tea"] = {1, 0, 0};
  const auto bytes = io::encode_query_lookup(q);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), std::string("SEMQRY1\0", 8));
  const auto back = io::decode_query_lookup(bytes, "q");
  EXPECT_EQ(back.dim, 3);
  EXPECT_EQ(back.vectors, q.vectors);

  // Rewrite the second record's text to repeat the first.
  auto dup = bytes;
  const std::string s(dup.begin(), dup.end());
  const auto pos = s.find("tea");
  ASSERT_NE(pos, std::string::npos);
  dup[pos - 4] = 6;
  dup.erase(dup.begin() + static_cast<long>(pos), dup.begin() + static_cast<long>(pos) + 3);
  const std::string coffee = "coffee";
  dup.insert(dup.begin() + static_cast<long>(pos), coffee.begin(), coffee.end());
  EXPECT_EQ(code_of([&] { io::decode_query_lookup(dup, "q"); }), ErrorCode::kDuplicateLabel);

  auto trailing = bytes;
  trailing.push_back(1);
  EXPECT_EQ(code_of([&] { io::decode_query_lookup(trailing, "q"); }), ErrorCode::kLengthMismatch);
}

TEST(Png, RgbRoundTripIsExactOnQuantizedValues) {
  test::TempDir dir;
  Image<float> img(7, 5, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>((i * 37) % 256) / 255.0f;
  io::write_png_rgb(dir.file("a.png"), img);
  const auto back = io::read_png_rgb(dir.file("a.png"));
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_EQ(back.data[i], img.data[i]);
  EXPECT_EQ(io::encode_png_rgb(img), test::read_bytes(dir.file("a.png")));
}

TEST(Png, LabelRoundTripAndStrictness) {
  test::TempDir dir;
  LabelMap labels(6, 4, 1);
  for (std::size_t i = 0; i < labels.data.size(); ++i) labels.data[i] = static_cast<std::uint16_t>(i * 1000);
  io::write_label_png(dir.file("l.png"), labels);
  EXPECT_EQ(io::read_label_png(dir.file("l.png")), labels);
  io::write_png_rgb(dir.file("rgb.png"), Image<float>(6, 4, 3, 0.5f));
  EXPECT_EQ(code_of([&] { io::read_label_png(dir.file("rgb.png")); }), ErrorCode::kParse);
  test::write_bytes(dir.path() / "junk.png", {1, 2, 3, 4, 5, 6, 7, 8, 9});
  EXPECT_EQ(code_of([&] { io::read_png_rgb(dir.file("junk.png")); }), ErrorCode::kBadMagic);
}

TEST(Dataset, FixtureLoads) {
  const Dataset ds = io::load_dataset(test::fixture_path("synthetic"));
  EXPECT_EQ(ds.frames.size(), 10u);
  EXPECT_EQ(ds.dictionary.entries(),
            (std::vector<std::string>{"coffee machine", "kettle", "apple"}));
  EXPECT_EQ(ds.embeddings.dim, 16);
  EXPECT_EQ(ds.embeddings.negative_phrases,
            (std::vector<std::string>{"object", "things", "stuff", "texture"}));
  EXPECT_EQ(ds.points.size(), 120u);
  EXPECT_EQ(ds.frames[4].name, "frame_04");
  EXPECT_EQ(ds.frames[0].image.width, 64);
  EXPECT_EQ(ds.frames[0].labels.height, 64);
}

TEST(Dataset, CorruptedGoldenFilesAreRejectedWithNamedErrors) {
  struct Case {
    const char* dir;
    ErrorCode code;
    const char* location;
  };
  const Case cases[] = {
      {"label_out_of_range", ErrorCode::kLabelOutOfRange, "frame frame_03"},
      {"bad_embedding_magic", ErrorCode::kBadMagic, "offset 0"},
      {"embedding_row_count", ErrorCode::kDimensionMismatch, "entry count"},
      {"missing_image", ErrorCode::kMissingFile, "frame frame_05"},
      {"malformed_manifest", ErrorCode::kParse, nullptr},
  };
  for (const Case& c : cases) {
    try {
      io::load_dataset(test::fixture_path(std::string("corrupted/") + c.dir));
      ADD_FAILURE() << c.dir << " was accepted";
    } catch (const FormatError& e) {
      EXPECT_EQ(e.code(), c.code) << c.dir << ": " << e.what();
      if (c.location) EXPECT_EQ(e.location(), c.location) << c.dir;
      EXPECT_FALSE(e.file().empty());
    }
  }
}

TEST(Dataset, MissingKeyNamesItsPath) {
  test::TempDir dir;
  const fs::path src = test::fixture_path("synthetic/manifest.json");
  nlohmann::json m = nlohmann::json::parse(std::ifstream(src));
  m["frames"][3].erase("fx");
  for (const char* key : {"dictionary_path", "embeddings_path", "points_path"}) {
    m[key] = (fs::path(test::fixture_path("synthetic")) / m[key].get<std::string>()).string();
  }
  for (auto& f : m["frames"]) {
    for (const char* key : {"image_path", "label_map_path"}) {
      f[key] = (fs::path(test::fixture_path("synthetic")) / f[key].get<std::string>()).string();
    }
  }
  std::ofstream(dir.file("manifest.json")) << m.dump();
  try {
    io::load_dataset(dir.path().string());
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingKey);
    EXPECT_EQ(e.location(), "frames[3].fx");
  }
}

TEST(Dataset, SaveLoadRoundTrip) {
  const Dataset ds = io::load_dataset(test::fixture_path("synthetic"));
  test::TempDir dir;
  io::save_dataset(ds, dir.path().string());
  const Dataset back = io::load_dataset(dir.path().string());
  ASSERT_EQ(back.frames.size(), ds.frames.size());
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    EXPECT_EQ(back.frames[i].name, ds.frames[i].name);
    EXPECT_EQ(back.frames[i].image, ds.frames[i].image);
    EXPECT_EQ(back.frames[i].labels, ds.frames[i].labels);
    EXPECT_TRUE(back.frames[i].camera.world_to_camera.isApprox(ds.frames[i].camera.world_to_camera, 1e-12));
  }
  EXPECT_EQ(back.dictionary, ds.dictionary);
  EXPECT_EQ(back.embeddings, ds.embeddings);
  EXPECT_EQ(back.points, ds.points);
}

TEST(Dataset, FrameOrderInManifestDoesNotChangeFrames) {
  const fs::path root = test::fixture_path("synthetic");
  nlohmann::json manifest;
  std::ifstream(root / "manifest.json") >> manifest;
  for (const char* key : {"dictionary_path", "embeddings_path", "points_path"}) {
    manifest[key] = (root / manifest[key].get<std::string>()).string();
  }
  auto& frames = manifest["frames"];
  for (auto& f : frames) {
    for (const char* key : {"image_path", "label_map_path"}) f[key] = (root / f[key].get<std::string>()).string();
  }
  std::reverse(frames.begin(), frames.end());
  test::TempDir dir;
  std::ofstream(dir.file("manifest.json")) << manifest.dump();

  const Dataset a = io::load_dataset(root.string());
  const Dataset b = io::load_dataset(dir.path().string());
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (const Frame& fa : a.frames) {
    const auto it = std::find_if(b.frames.begin(), b.frames.end(), [&](const Frame& f) { return f.name == fa.name; });
    ASSERT_NE(it, b.frames.end()) << fa.name;
    EXPECT_EQ(it->image, fa.image);
    EXPECT_EQ(it->labels, fa.labels);
    EXPECT_EQ(it->camera.world_to_camera, fa.camera.world_to_camera);
  }
  EXPECT_EQ(b.dictionary, a.dictionary);
  EXPECT_EQ(b.embeddings, a.embeddings);
  EXPECT_EQ(b.points, a.points);
}

TEST(Config, FixtureConfigParses) {
  const auto cfg = io::load_config(test::fixture_path("synthetic/train.json"));
  EXPECT_EQ(cfg.train.iterations, 5000);
  EXPECT_EQ(cfg.train.seed, 7u);
  EXPECT_DOUBLE_EQ(cfg.loss.lambda_dssim, 0.2);
}

TEST(Config, RoundTripsThroughJson) {
  io::RunConfig cfg;
  cfg.train.iterations = 123;
  cfg.train.lr.head = 0.02;
  cfg.train.densify.enabled = false;
  cfg.loss.gamma_undetected = 0.25;
  const auto back = io::parse_config(io::config_to_json(cfg));
  EXPECT_EQ(io::config_to_json(back), io::config_to_json(cfg));
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_EQ(code_of([] { io::parse_config(R"({"train": {"iterationz": 5}})"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { io::parse_config(R"({"optimizer": {}})"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { io::parse_config(R"({"train": {"iterations": "many"}})"); }),
            ErrorCode::kParse);
  EXPECT_EQ(code_of([] { io::parse_config(R"({"loss": {"lambda_dssim": 3}})"); }),
            ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { io::parse_config("{"); }), ErrorCode::kParse);
}
