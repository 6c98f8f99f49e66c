#include "service/service.hpp"

#include <charconv>
#include <nlohmann/json.hpp>

#include "semsplat/edit.hpp"
#include "semsplat/error.hpp"
#include "semsplat/io/checkpoint.hpp"
#include "semsplat/io/embeddings.hpp"
#include "semsplat/io/png.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

namespace semsplat::service {

using nlohmann::json;

namespace {

Response json_response(const json& j, int status = 200) {
  return {status, "application/json", j.dump()};
}

int status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEditConflict:
      return 409;
    case ErrorCode::kUnavailableEncoder:
      return 503;
    case ErrorCode::kIo:
      return 500;
    default:
      return 400;
  }
}

Response error_response(const Error& e) {
  return json_response({{"error", std::string(error_code_name(e.code()))}, {"message", e.what()}},
                       status_of(e.code()));
}

// Runs `fn`, mapping library errors and malformed JSON to HTTP statuses.
template <typename Fn>
Response guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return json_response({{"error", "parse"}, {"message", e.what()}}, 400);
  }
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw_invalid("parameter '" + key + "' is not a number");
  return v;
}

// Query-string parameters as the JSON object the POST endpoints accept.
json params_to_json(const std::map<std::string, std::string>& params) {
  json j = json::object();
  for (const auto& [key, value] : params) {
    if (key == "pose") {
      json pose = json::array();
      std::size_t start = 0;
      while (start <= value.size()) {
        const std::size_t comma = std::min(value.find(',', start), value.size());
        pose.push_back(parse_number("pose", value.substr(start, comma - start)));
        start = comma + 1;
      }
      j["pose"] = pose;
    } else {
      j[key] = parse_number(key, value);
    }
  }
  return j;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Camera camera_from(const json& req, const std::optional<Dataset>& dataset) {
  const bool has_frames = dataset && !dataset->frames.empty();
  if (req.contains("pose")) {
    const auto pose = req.at("pose").get<std::vector<double>>();
    if (pose.size() != 16) throw_invalid("pose must hold 16 values (row-major camera-to-world)");
    Eigen::Matrix4d c2w;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) c2w(r, c) = pose[4 * r + c];
    }
    // Intrinsics default to those of frame 0 when a dataset is loaded.
    const Camera* ref = has_frames ? &dataset->frames.front().camera : nullptr;
    auto intrinsic = [&](const char* key, double ref_value) {
      if (req.contains(key)) return req.at(key).get<double>();
      if (!ref) throw_invalid(std::string("pose requests need '") + key + "' when no dataset is loaded");
      return ref_value;
    };
    const int width = static_cast<int>(intrinsic("width", ref ? ref->width : 0));
    const int height = static_cast<int>(intrinsic("height", ref ? ref->height : 0));
    const double fx = intrinsic("fx", ref ? ref->fx : 0);
    const double fy = get_or(req, "fy", ref ? ref->fy : fx);
    const double cx = get_or(req, "cx", ref ? ref->cx : width / 2.0);
    const double cy = get_or(req, "cy", ref ? ref->cy : height / 2.0);
    Camera cam = Camera::from_camera_to_world(c2w, fx, fy, cx, cy, width, height);
    cam.validate();
    return cam;
  }
  if (!has_frames) throw_invalid("frame requests need a dataset; pass a pose instead");
  const double f = get_or(req, "frame", 0.0);
  const auto n = dataset->frames.size();
  if (f < 0 || f != static_cast<double>(static_cast<long long>(f)) || f >= static_cast<double>(n)) {
    throw_invalid("frame must be an integer in [0, " + std::to_string(n) + ")");
  }
  return dataset->frames[static_cast<std::size_t>(f)].camera;
}

std::vector<std::uint32_t> edit_targets(const Scene<float>& scene, const json& req) {
  if (req.contains("label") == req.contains("ids")) throw_invalid("edit needs exactly one of 'label' or 'ids'");
  if (req.contains("label")) return select_by_label(scene, req.at("label").get<std::string>());
  return req.at("ids").get<std::vector<std::uint32_t>>();
}

Eigen::Vector3d vec3(const json& params, const char* key) {
  if (!params.contains(key)) throw_invalid(std::string("edit params need '") + key + "'");
  const auto v = params.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw_invalid(std::string("'") + key + "' must hold 3 values");
  return {v[0], v[1], v[2]};
}

}  // namespace

Camera camera_from_params(const std::map<std::string, std::string>& params,
                          const std::optional<Dataset>& dataset) {
  return camera_from(params_to_json(params), dataset);
}

std::vector<std::uint8_t> render_png(const Scene<float>& scene, const Camera& camera,
                                     const RasterConfig& cfg) {
  return io::encode_png_rgb(semsplat::render(scene, camera, cfg).color);
}

QueryEmbedder make_embedder(const std::string& lookup_path, const std::string& encoder_url) {
  std::optional<QueryLookup> lookup;
  if (!lookup_path.empty()) lookup = io::load_query_lookup(lookup_path);
  std::shared_ptr<TextEncoder> encoder;
  if (!encoder_url.empty()) encoder = std::make_shared<HttpTextEncoder>(encoder_url);
  return QueryEmbedder(std::move(lookup), std::move(encoder));
}

std::vector<std::uint32_t> encode_rle(const Mask& mask) {
  std::vector<std::uint32_t> counts;
  bool value = false;
  std::uint32_t run = 0;
  for (auto v : mask.data) {
    if ((v != 0) != value) {
      counts.push_back(run);
      value = !value;
      run = 0;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

Mask decode_rle(const std::vector<std::uint32_t>& counts, int width, int height) {
  Mask mask(width, height, 1);
  std::size_t pos = 0;
  bool value = false;
  for (std::uint32_t run : counts) {
    if (pos + run > mask.data.size()) throw_invalid("rle runs exceed the mask size");
    std::fill_n(mask.data.begin() + static_cast<std::ptrdiff_t>(pos), run, value ? 1 : 0);
    pos += run;
    value = !value;
  }
  if (pos != mask.data.size()) throw_invalid("rle runs do not cover the mask");
  return mask;
}

SceneService::SceneService(Scene<float> scene, ServiceOptions options)
    : options_(std::move(options)) {
  scene.validate();
  current_ = std::make_shared<const Snapshot>(Snapshot{std::move(scene), 0});
}

std::shared_ptr<const Snapshot> SceneService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return current_;
}

Response SceneService::health() const {
  const auto snap = snapshot();
  return json_response({{"status", "ok"},
                        {"version", snap->version},
                        {"gaussians", snap->scene.gaussians.size()},
                        {"encoder", options_.embedder.has_encoder()}});
}

Response SceneService::render(const std::map<std::string, std::string>& params) const {
  return guarded([&] {
    const Camera cam = camera_from_params(params, options_.dataset);
    const auto snap = snapshot();
    const auto png = render_png(snap->scene, cam, options_.raster);
    return Response{200, "image/png", std::string(png.begin(), png.end())};
  });
}

Response SceneService::query(const std::string& json_body) const {
  return guarded([&] {
    const json req = json::parse(json_body);
    if (!req.contains("prompt")) throw_invalid("query needs a 'prompt'");
    const auto prompt = req.at("prompt").get<std::string>();
    const double threshold = get_or(req, "threshold", 0.5);
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw_invalid("threshold must lie in [0, 1]");
    const Camera cam = camera_from(req, options_.dataset);
    const auto snap = snapshot();
    const Scene<float>& scene = snap->scene;
    if (scene.embeddings.empty()) throw Error(ErrorCode::kConfiguration, "scene has no embedding table");
    const auto emb = options_.embedder.embed(prompt, scene.embeddings.dim);
    const QueryResult result = resolve_query(scene, emb, cam, threshold, prompt, options_.raster);

    json ranked = json::array();
    for (const RankedLabel& r : result.ranked) {
      ranked.push_back({{"label", r.label},
                        {"index", r.index},
                        {"relevancy", r.relevancy},
                        {"gaussians", r.gaussian_ids.size()},
                        {"centroid", {r.centroid.x(), r.centroid.y(), r.centroid.z()}},
                        {"mask", {{"width", r.mask.width},
                                  {"height", r.mask.height},
                                  {"counts", encode_rle(r.mask)}}}});
    }
    return json_response({{"query", result.query},
                          {"threshold", result.threshold},
                          {"version", snap->version},
                          {"width", cam.width},
                          {"height", cam.height},
                          {"ranked", ranked}});
  });
}

Response SceneService::edit(const std::string& json_body) {
  return guarded([&] {
    const json req = json::parse(json_body);
    std::lock_guard serial(edit_mutex_);
    const auto base = snapshot();
    if (req.contains("expected_version") &&
        req.at("expected_version").get<std::uint64_t>() != base->version) {
      throw Error(ErrorCode::kEditConflict,
                  "scene is at version " + std::to_string(base->version) + ", edit expected " +
                      std::to_string(req.at("expected_version").get<std::uint64_t>()));
    }
    const auto op = req.at("op").get<std::string>();
    const json params = get_or(req, "params", json::object());
    auto next = std::make_shared<Snapshot>(Snapshot{base->scene, base->version + 1});
    const auto ids = edit_targets(next->scene, req);
    if (op == "recolor") {
      recolor(next->scene, ids, vec3(params, "rgb"));
    } else if (op == "translate") {
      translate(next->scene, ids, vec3(params, "offset"));
    } else if (op == "delete") {
      delete_gaussians(next->scene, ids);
    } else {
      throw_invalid("unknown edit op '" + op + "' (expected recolor, delete or translate)");
    }
    // Persist before publishing so a failed save leaves the old state live.
    if (!options_.checkpoint_path.empty()) io::save_checkpoint(next->scene, options_.checkpoint_path);
    {
      std::lock_guard lock(snapshot_mutex_);
      current_ = next;
    }
    return json_response({{"version", next->version},
                          {"affected", ids.size()},
                          {"gaussians", next->scene.gaussians.size()}});
  });
}

Response SceneService::summary() const {
  const auto snap = snapshot();
  const Scene<float>& s = snap->scene;
  json labels = json::array();
  for (int i = 1; i <= s.dictionary.size(); ++i) {
    labels.push_back({{"index", i},
                      {"label", s.dictionary.label_of(i)},
                      {"gaussians", gaussians_of_class(s, i).size()}});
  }
  json frames = json::array();
  if (options_.dataset) {
    for (const Frame& f : options_.dataset->frames) {
      frames.push_back({{"name", f.name}, {"width", f.camera.width}, {"height", f.camera.height}});
    }
  }
  return json_response({{"version", snap->version},
                        {"gaussians", s.gaussians.size()},
                        {"sh_degree", s.sh_degree()},
                        {"labels", labels},
                        {"negatives", s.embeddings.negative_phrases},
                        {"embedding_dim", s.embeddings.dim},
                        {"frames", frames}});
}

void SceneService::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, health());
  });
  server.Get("/render", [this, reply](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params[k] = v;
    reply(res, render(params));
  });
  server.Post("/query", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, query(req.body));
  });
  server.Post("/edit", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, edit(req.body));
  });
  server.Get("/scene/summary", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, summary());
  });
}

}  // namespace semsplat::service
