#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "semsplat/dataset.hpp"
#include "semsplat/rasterizer.hpp"
#include "semsplat/scene.hpp"
#include "semsplat/semantics.hpp"

namespace httplib {
class Server;
}

namespace semsplat::service {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Immutable committed state; readers hold a shared_ptr for as long as
/// they need it, so an edit never tears a request in flight.
struct Snapshot {
  Scene<float> scene;
  std::uint64_t version = 0;
};

struct ServiceOptions {
  /// Written atomically after every committed edit when non-empty.
  std::string checkpoint_path;
  /// Source of frame cameras for `frame=` requests; optional.
  std::optional<Dataset> dataset;
  QueryEmbedder embedder;
  RasterConfig raster;
};

/// Render/query/edit endpoints over one scene. Reads run on the latest
/// snapshot without locking each other; edits are serialized and publish
/// a fresh copy.
class SceneService {
 public:
  SceneService(Scene<float> scene, ServiceOptions options);

  std::shared_ptr<const Snapshot> snapshot() const;

  Response health() const;
  /// Query parameters as received: frame, or pose (16 comma-separated
  /// camera-to-world values, row-major) with optional intrinsics.
  Response render(const std::map<std::string, std::string>& params) const;
  Response query(const std::string& json_body) const;
  Response edit(const std::string& json_body);
  Response summary() const;

  /// Registers every endpoint on `server`.
  void mount(httplib::Server& server);

 private:
  ServiceOptions options_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> current_;
  std::mutex edit_mutex_;
};

/// Camera from request parameters: `frame` (index into the dataset) or
/// `pose` plus optional width, height, fx, fy, cx, cy.
Camera camera_from_params(const std::map<std::string, std::string>& params,
                          const std::optional<Dataset>& dataset);

/// PNG bytes of the rendered color image; shared by the CLI and /render.
std::vector<std::uint8_t> render_png(const Scene<float>& scene, const Camera& camera,
                                     const RasterConfig& cfg);

/// Lookup file and/or encoder URL; either may be empty.
QueryEmbedder make_embedder(const std::string& lookup_path, const std::string& encoder_url);

/// Row-major run lengths of a boolean mask, alternating false/true runs
/// and starting with a (possibly empty) false run.
std::vector<std::uint32_t> encode_rle(const Mask& mask);
Mask decode_rle(const std::vector<std::uint32_t>& counts, int width, int height);

}  // namespace semsplat::service
