#include "semsplat/io/dataset_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "io/binary.hpp"
#include "semsplat/io/embeddings.hpp"
#include "semsplat/io/png.hpp"

namespace semsplat::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_file(const std::string& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError(ErrorCode::kParse, path, "offset " + std::to_string(e.byte), e.what());
  }
}

// Typed access to a required key, with the key path in errors.
class Fields {
 public:
  Fields(const json& j, std::string file, std::string where)
      : j_(j), file_(std::move(file)), where_(std::move(where)) {
    if (!j_.is_object()) throw FormatError(ErrorCode::kParse, file_, where_, "expected an object");
  }

  const json& at(const std::string& key) const {
    auto it = j_.find(key);
    if (it == j_.end()) throw FormatError(ErrorCode::kMissingKey, file_, path(key), "required key is missing");
    return *it;
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return at(key).get<T>();
    } catch (const json::exception& e) {
      throw FormatError(ErrorCode::kParse, file_, path(key), e.what());
    }
  }
  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }
  const std::string& file() const { return file_; }

 private:
  const json& j_;
  std::string file_;
  std::string where_;
};

Eigen::Matrix4d parse_matrix(const Fields& f, const std::string& key) {
  const auto rows = f.get<std::vector<std::vector<double>>>(key);
  if (rows.size() != 4) throw FormatError(ErrorCode::kDimensionMismatch, f.file(), f.path(key), "expected 4 rows");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    if (rows[r].size() != 4) {
      throw FormatError(ErrorCode::kDimensionMismatch, f.file(), f.path(key), "expected 4 columns");
    }
    for (int c = 0; c < 4; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::string resolve(const fs::path& root, const std::string& rel) {
  const fs::path p(rel);
  return (p.is_absolute() ? p : root / p).string();
}

void load_points(const std::string& path, Dataset& ds) {
  std::ifstream in(path);
  if (!in) throw FormatError(ErrorCode::kMissingFile, path, "file", "cannot open point cloud");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    float v[6];
    int k = 0;
    while (k < 6 && ss >> v[k]) ++k;
    if (k == 0 && ss.eof()) continue;
    std::string extra;
    if (k != 6 || (ss >> extra)) {
      throw FormatError(ErrorCode::kParse, path, "line " + std::to_string(line_no),
                        "expected 'x y z r g b'");
    }
    ds.points.emplace_back(v[0], v[1], v[2]);
    ds.point_colors.emplace_back(v[3], v[4], v[5]);
  }
}

}  // namespace

SemanticDictionary load_dictionary(const std::string& path) {
  const json j = parse_json_file(path);
  const Fields f(j, path, "");
  const auto labels = f.get<std::vector<std::string>>("entries");
  if (labels.empty()) throw FormatError(ErrorCode::kParse, path, "entries", "dictionary is empty");
  try {
    return SemanticDictionary(labels);
  } catch (const Error& e) {
    throw FormatError(e.code(), path, "entries", e.what());
  }
}

void save_dictionary(const SemanticDictionary& dict, const std::string& path) {
  const json j = {{"entries", dict.entries()}};
  const std::string text = j.dump(2) + "\n";
  detail::write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dataset load_dataset(const std::string& path) {
  fs::path manifest_path(path);
  if (fs::is_directory(manifest_path)) manifest_path /= kManifestName;
  const std::string mfile = manifest_path.string();
  if (!fs::exists(manifest_path)) {
    throw FormatError(ErrorCode::kMissingFile, mfile, "file", "manifest does not exist");
  }
  const fs::path root = manifest_path.parent_path();
  const json j = parse_json_file(mfile);
  const Fields top(j, mfile, "");

  const int version = top.get<int>("version");
  if (version != kManifestVersion) {
    throw FormatError(ErrorCode::kUnsupportedVersion, mfile, "version",
                      "manifest version " + std::to_string(version));
  }
  Dataset ds;
  ds.dictionary = load_dictionary(resolve(root, top.get<std::string>("dictionary_path")));

  const std::string emb_path = resolve(root, top.get<std::string>("embeddings_path"));
  EmbeddingFile emb = load_embeddings(emb_path);
  if (static_cast<int>(emb.entry_labels.size()) != ds.dictionary.size()) {
    throw FormatError(ErrorCode::kDimensionMismatch, emb_path, "entry count",
                      "embedding file has " + std::to_string(emb.entry_labels.size()) +
                          " entry rows but the dictionary has " +
                          std::to_string(ds.dictionary.size()) + " entries");
  }
  for (int i = 1; i <= ds.dictionary.size(); ++i) {
    if (emb.entry_labels[i - 1] != ds.dictionary.label_of(i)) {
      throw FormatError(ErrorCode::kConfiguration, emb_path, "entry " + std::to_string(i),
                        "row label '" + emb.entry_labels[i - 1] + "' does not match dictionary entry '" +
                            ds.dictionary.label_of(i) + "'");
    }
  }
  ds.embeddings = std::move(emb.table);

  if (top.has("background")) {
    const auto bg = top.get<std::vector<float>>("background");
    if (bg.size() != 3) throw FormatError(ErrorCode::kDimensionMismatch, mfile, "background", "expected 3 values");
    for (int c = 0; c < 3; ++c) ds.background[c] = bg[c];
  }
  if (top.has("points_path")) load_points(resolve(root, top.get<std::string>("points_path")), ds);

  const json& frames = top.at("frames");
  if (!frames.is_array() || frames.empty()) {
    throw FormatError(ErrorCode::kParse, mfile, "frames", "expected a non-empty array");
  }
  ds.frames.resize(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Fields f(frames[i], mfile, "frames[" + std::to_string(i) + "]");
    Frame& fr = ds.frames[i];
    const std::string image_rel = f.get<std::string>("image_path");
    fr.name = f.has("name") ? f.get<std::string>("name") : fs::path(image_rel).stem().string();
    const int width = f.get<int>("width");
    const int height = f.get<int>("height");
    try {
      fr.camera = Camera::from_camera_to_world(parse_matrix(f, "camera_to_world"), f.get<double>("fx"),
                                               f.get<double>("fy"), f.get<double>("cx"),
                                               f.get<double>("cy"), width, height);
      fr.camera.validate();
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(ErrorCode::kParse, mfile, f.path("camera_to_world"), e.what());
    }

    const std::string image_path = resolve(root, image_rel);
    if (!fs::exists(image_path)) {
      throw FormatError(ErrorCode::kMissingFile, image_path, "frame " + fr.name, "image does not exist");
    }
    fr.image = read_png_rgb(image_path);
    const std::string label_path = resolve(root, f.get<std::string>("label_map_path"));
    if (!fs::exists(label_path)) {
      throw FormatError(ErrorCode::kMissingFile, label_path, "frame " + fr.name,
                        "label map does not exist");
    }
    fr.labels = read_label_png(label_path);
    if (fr.image.width != width || fr.image.height != height) {
      throw FormatError(ErrorCode::kDimensionMismatch, image_path, "frame " + fr.name,
                        "image is " + std::to_string(fr.image.width) + "x" +
                            std::to_string(fr.image.height) + ", manifest says " +
                            std::to_string(width) + "x" + std::to_string(height));
    }
    if (fr.labels.width != width || fr.labels.height != height) {
      throw FormatError(ErrorCode::kDimensionMismatch, label_path, "frame " + fr.name,
                        "label map size differs from the frame size");
    }
    for (std::size_t p = 0; p < fr.labels.data.size(); ++p) {
      if (fr.labels.data[p] > ds.dictionary.size()) {
        throw FormatError(ErrorCode::kLabelOutOfRange, label_path, "frame " + fr.name,
                          "pixel (" + std::to_string(p % width) + ", " + std::to_string(p / width) +
                              ") has label " + std::to_string(fr.labels.data[p]) + " > N = " +
                              std::to_string(ds.dictionary.size()));
      }
    }
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  save_dictionary(ds.dictionary, (root / "dictionary.json").string());
  save_embeddings((root / "embeddings.bin").string(), ds.dictionary.entries(), ds.embeddings);

  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["dictionary_path"] = "dictionary.json";
  manifest["embeddings_path"] = "embeddings.bin";
  manifest["background"] = ds.background;
  if (!ds.points.empty()) {
    std::ostringstream pts;
    pts.precision(9);
    pts << "# x y z r g b\n";
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
      const auto& p = ds.points[i];
      const auto& c = ds.point_colors[i];
      pts << p[0] << ' ' << p[1] << ' ' << p[2] << ' ' << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    }
    const std::string text = pts.str();
    detail::write_file_atomic((root / "points.txt").string(),
                              std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    manifest["points_path"] = "points.txt";
  }
  json frames = json::array();
  for (const Frame& f : ds.frames) {
    const std::string image_rel = "images/" + f.name + ".png";
    const std::string label_rel = "labels/" + f.name + ".png";
    write_png_rgb((root / image_rel).string(), f.image);
    write_label_png((root / label_rel).string(), f.labels);
    const Eigen::Matrix4d c2w = f.camera.camera_to_world();
    json m = json::array();
    for (int r = 0; r < 4; ++r) m.push_back({c2w(r, 0), c2w(r, 1), c2w(r, 2), c2w(r, 3)});
    frames.push_back({{"name", f.name},
                      {"image_path", image_rel},
                      {"label_map_path", label_rel},
                      {"camera_to_world", m},
                      {"fx", f.camera.fx},
                      {"fy", f.camera.fy},
                      {"cx", f.camera.cx},
                      {"cy", f.camera.cy},
                      {"width", f.camera.width},
                      {"height", f.camera.height}});
  }
  manifest["frames"] = frames;
  const std::string text = manifest.dump(2) + "\n";
  detail::write_file_atomic((root / kManifestName).string(),
                            std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace semsplat::io
