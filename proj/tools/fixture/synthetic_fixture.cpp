#include "synthetic_fixture.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "semsplat/error.hpp"
#include "semsplat/io/checkpoint.hpp"
#include "semsplat/io/dataset_io.hpp"
#include "semsplat/io/embeddings.hpp"
#include "semsplat/io/png.hpp"
#include "semsplat/rasterizer.hpp"

namespace semsplat::fixture {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kDim = 16;
constexpr int kSize = 64;
constexpr int kViews = 10;

struct ObjectSpec {
  const char* label;
  int count;
  Eigen::Vector3d center;
  Eigen::Vector3d half_extent;
  std::vector<Eigen::Vector3d> palette;
};

std::vector<float> unit(std::initializer_list<std::pair<int, float>> parts) {
  std::vector<float> v(kDim, 0.0f);
  for (auto [axis, value] : parts) v[axis] = value;
  return normalized(v);
}

Scene<float> ground_truth() {
  const std::vector<ObjectSpec> objects = {
      {"coffee machine", 8, {-0.55, 0.0, 0.0}, {0.14, 0.32, 0.14},
       {{0.30, 0.18, 0.12}, {0.12, 0.12, 0.14}, {0.55, 0.35, 0.20}}},
      {"kettle", 6, {0.5, 0.1, 0.25}, {0.18, 0.14, 0.18}, {{0.78, 0.80, 0.85}, {0.55, 0.60, 0.70}}},
      {"apple", 6, {0.05, 0.25, -0.5}, {0.12, 0.10, 0.12}, {{0.85, 0.10, 0.10}, {0.35, 0.70, 0.20}}},
  };
  std::vector<std::string> labels;
  for (const auto& o : objects) labels.emplace_back(o.label);
  Scene<float> scene(0, SemanticDictionary(labels));

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const ObjectSpec& o = objects[k];
    for (int i = 0; i < o.count; ++i) {
      GaussianRow<float> row;
      for (int a = 0; a < 3; ++a) row.mean[a] = static_cast<float>(o.center[a] + o.half_extent[a] * uni(rng));
      Vec4<float> q(static_cast<float>(normal(rng)), static_cast<float>(normal(rng)),
                    static_cast<float>(normal(rng)), static_cast<float>(normal(rng)));
      row.rotation = q / q.norm();
      for (int a = 0; a < 3; ++a) row.log_scale[a] = static_cast<float>(std::log(0.09 + 0.06 * (uni(rng) + 1.0)));
      row.opacity_logit = logit(static_cast<float>(0.9 + 0.04 * uni(rng)));
      const Eigen::Vector3d rgb = o.palette[static_cast<std::size_t>(i) % o.palette.size()];
      row.sh.resize(3);
      for (int c = 0; c < 3; ++c) {
        row.sh[c] = rgb_to_sh_dc(static_cast<float>(std::clamp(rgb[c] + 0.04 * uni(rng), 0.0, 1.0)));
      }
      row.semantic = Vec3<float>::Zero();
      row.semantic[static_cast<int>(k)] = 5.0f;
      scene.gaussians.push_back(row);
    }
  }
  // Class k+1 fires on code axis k once accumulated alpha exceeds 0.05.
  for (int k = 1; k <= 3; ++k) scene.head.weight[static_cast<std::size_t>(k) * kSemanticDim + (k - 1)] = 4.0f;
  scene.head.bias[0] = 1.0f;

  // Entries on their own axes with a shared component; negatives on others.
  scene.embeddings.dim = kDim;
  scene.embeddings.add_entry(unit({{0, 1.0f}, {15, 0.2f}}));
  scene.embeddings.add_entry(unit({{1, 1.0f}, {15, 0.2f}}));
  scene.embeddings.add_entry(unit({{2, 1.0f}, {15, 0.2f}}));
  const char* negatives[] = {"object", "things", "stuff", "texture"};
  for (int i = 0; i < 4; ++i) scene.embeddings.add_negative(negatives[i], unit({{3 + i, 1.0f}, {15, 0.2f}}));
  return scene;
}

QueryLookup query_table() {
  QueryLookup q;
  q.dim = kDim;
  q.vectors["coffee machine"] = unit({{0, 1.0f}, {15, 0.2f}});
  q.vectors["kettle"] = unit({{1, 1.0f}, {15, 0.2f}});
  q.vectors["apple"] = unit({{2, 1.0f}, {15, 0.2f}});
  q.vectors["coffee"] = unit({{0, 0.9f}, {1, 0.25f}, {7, 0.3f}, {15, 0.2f}});
  q.vectors["tea"] = unit({{0, 0.6f}, {1, 0.45f}, {8, 0.55f}, {15, 0.2f}});
  q.vectors["fruit"] = unit({{2, 0.8f}, {9, 0.6f}, {15, 0.2f}});
  q.vectors["car"] = unit({{10, 1.0f}});
  return q;
}

Dataset render_dataset(const Scene<float>& truth) {
  Dataset ds;
  ds.dictionary = truth.dictionary;
  ds.embeddings = truth.embeddings;
  ds.background = truth.background;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < kViews; ++i) {
    const double theta = 2.0 * pi * i / kViews;
    Frame f;
    f.name = "frame_" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    f.camera = Camera::look_at({2.8 * std::cos(theta), -0.9, 2.8 * std::sin(theta)}, {0.0, 0.05, 0.0},
                               {0.0, -1.0, 0.0}, 72.0, 72.0, kSize, kSize);
    const RenderOutput<float> out = render(truth, f.camera);
    // Round-trip through 8 bits so the in-memory dataset equals the files.
    f.image = out.color;
    for (float& v : f.image.data) v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
    f.labels = pixel_label_map(out.feature, truth.head);
    ds.frames.push_back(std::move(f));
  }

  // Sparse "structure from motion" points drawn from the true Gaussians.
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, truth.gaussians.size() - 1);
  for (int p = 0; p < 120; ++p) {
    const std::size_t g = pick(rng);
    const Mat3<float> r = rotation_matrix<float>(truth.gaussians.rotation(g));
    const Vec3<float> s = truth.gaussians.log_scale(g).array().exp().matrix();
    Vec3<float> z;
    for (int a = 0; a < 3; ++a) z[a] = static_cast<float>(0.8 * normal(rng)) * s[a];
    ds.points.emplace_back(truth.gaussians.mean(g) + r * z);
    const auto sh = truth.gaussians.sh_of(g);
    Eigen::Vector3f c;
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp(static_cast<float>(sh[a] * kShC0 + 0.5 + 0.05 * normal(rng)), 0.0f, 1.0f);
    }
    ds.point_colors.push_back(c);
  }
  ds.validate();
  return ds;
}

std::string training_config() {
  const json j = {
      {"train", {{"iterations", 5000}, {"seed", 7}, {"sh_degree", 1}, {"sh_warmup_interval", 1000}}},
      {"lr", {{"means_decay_steps", 5000}}},
      {"densify",
       {{"start_iteration", 300},
        {"stop_iteration", 2500},
        {"interval", 100},
        {"opacity_reset_interval", 0},
        // At 64x64 each Gaussian spans a large share of the image, so its
        // screen-space gradient is far larger than at full resolution.
        {"grad_threshold", 1e-2}}},
      {"loss", {{"lambda_dssim", 0.2}, {"gamma_undetected", 0.1}, {"semantic_weight", 1.0}}},
  };
  return j.dump(2) + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

// Manifest whose paths point back into the clean dataset.
json relinked_manifest(const fs::path& clean_manifest) {
  std::ifstream in(clean_manifest);
  json m = json::parse(in);
  const std::string up = "../../synthetic/";
  for (const char* key : {"dictionary_path", "embeddings_path", "points_path"}) {
    m[key] = up + m[key].get<std::string>();
  }
  for (auto& f : m["frames"]) {
    f["image_path"] = up + f["image_path"].get<std::string>();
    f["label_map_path"] = up + f["label_map_path"].get<std::string>();
  }
  return m;
}

}  // namespace

SyntheticFixture make_synthetic() {
  SyntheticFixture fx;
  fx.truth = ground_truth();
  fx.dataset = render_dataset(fx.truth);
  fx.queries = query_table();
  fx.config_json = training_config();
  return fx;
}

const std::vector<CorruptCase>& corrupt_cases() {
  static const std::vector<CorruptCase> cases = {
      {"label_out_of_range", "label-out-of-range"},
      {"bad_embedding_magic", "bad-magic"},
      {"embedding_row_count", "dimension-mismatch"},
      {"missing_image", "missing-file"},
      {"malformed_manifest", "parse"},
  };
  return cases;
}

void write_fixtures(const std::string& dir) {
  const SyntheticFixture fx = make_synthetic();
  const fs::path root(dir);
  const fs::path clean = root / "synthetic";
  io::save_dataset(fx.dataset, clean.string());
  io::save_checkpoint(fx.truth, (clean / "ground_truth.ckpt").string());
  io::save_query_lookup((clean / "queries.bin").string(), fx.queries);
  write_text(clean / "train.json", fx.config_json);

  const fs::path bad = root / "corrupted";
  const fs::path manifest = clean / io::kManifestName;
  const int n = fx.dataset.dictionary.size();

  {
    const fs::path d = bad / "label_out_of_range";
    json m = relinked_manifest(manifest);
    LabelMap labels = fx.dataset.frames[3].labels;
    labels.at(kSize / 2, kSize / 2) = static_cast<std::uint16_t>(n + 1);
    fs::create_directories(d);
    io::write_label_png((d / "frame_03_labels.png").string(), labels);
    m["frames"][3]["label_map_path"] = "frame_03_labels.png";
    write_text(d / io::kManifestName, m.dump(2) + "\n");
  }
  {
    const fs::path d = bad / "bad_embedding_magic";
    json m = relinked_manifest(manifest);
    auto bytes = io::encode_embeddings(fx.dataset.dictionary.entries(), fx.dataset.embeddings);
    bytes[6] = 'X';
    write_bytes(d / "embeddings.bin", bytes);
    m["embeddings_path"] = "embeddings.bin";
    write_text(d / io::kManifestName, m.dump(2) + "\n");
  }
  {
    const fs::path d = bad / "embedding_row_count";
    json m = relinked_manifest(manifest);
    EmbeddingTable short_table = fx.dataset.embeddings;
    short_table.entry_vectors.resize(static_cast<std::size_t>(n - 1) * short_table.dim);
    std::vector<std::string> rows(fx.dataset.dictionary.entries().begin(),
                                  fx.dataset.dictionary.entries().end() - 1);
    write_bytes(d / "embeddings.bin", io::encode_embeddings(rows, short_table));
    m["embeddings_path"] = "embeddings.bin";
    write_text(d / io::kManifestName, m.dump(2) + "\n");
  }
  {
    const fs::path d = bad / "missing_image";
    json m = relinked_manifest(manifest);
    m["frames"][5]["image_path"] = "images/frame_05.png";
    write_text(d / io::kManifestName, m.dump(2) + "\n");
  }
  {
    const fs::path d = bad / "malformed_manifest";
    const std::string text = relinked_manifest(manifest).dump(2);
    // Cut inside the frames array.
    write_text(d / io::kManifestName, text.substr(0, text.find("\"frames\"") + 40) + "\n");
  }
}

}  // namespace semsplat::fixture
