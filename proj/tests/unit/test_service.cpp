#include <gtest/gtest.h>

#include <atomic>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "semsplat/edit.hpp"
#include "semsplat/error.hpp"
#include "semsplat/io/checkpoint.hpp"
#include "semsplat/io/dataset_io.hpp"
#include "semsplat/io/embeddings.hpp"
#include "semsplat/semantics.hpp"
#include "service/service.hpp"
#include "temp_dir.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace semsplat;
using namespace semsplat::service;
using nlohmann::json;

namespace {

const Dataset& dataset() {
  static const Dataset ds = io::load_dataset(test::fixture_path("synthetic"));
  return ds;
}

Scene<float> truth() { return io::load_checkpoint(test::fixture_path("synthetic/ground_truth.ckpt")); }

ServiceOptions options(const std::string& checkpoint = {}) {
  ServiceOptions o;
  o.checkpoint_path = checkpoint;
  o.dataset = dataset();
  o.embedder = make_embedder(test::fixture_path("synthetic/queries.bin"), "");
  return o;
}

std::string pose_param(const Camera& cam) {
  const Eigen::Matrix4d c2w = cam.camera_to_world();
  std::string s;
  char buf[64];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", c2w(r, c));
      s += (s.empty() ? "" : ",") + std::string(buf);
    }
  }
  return s;
}

std::vector<std::string> ranked_labels(const json& j) {
  std::vector<std::string> out;
  for (const auto& r : j.at("ranked")) out.push_back(r.at("label"));
  return out;
}

}  // namespace

TEST(Rle, RoundTripsAndStartsWithFalseRun) {
  Mask m(5, 3, 1);
  EXPECT_EQ(encode_rle(m), (std::vector<std::uint32_t>{15}));
  m.data[0] = 1;
  m.data[1] = 1;
  m.data[7] = 1;
  EXPECT_EQ(encode_rle(m), (std::vector<std::uint32_t>{0, 2, 5, 1, 7}));
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Mask r(7, 6, 1);
    for (auto& v : r.data) v = rng() % 3 == 0;
    const auto counts = encode_rle(r);
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    EXPECT_EQ(total, r.data.size());
    EXPECT_EQ(decode_rle(counts, 7, 6), r);
  }
  EXPECT_THROW(decode_rle({3, 2}, 2, 2), semsplat::Error);
  EXPECT_THROW(decode_rle({1, 1}, 2, 2), semsplat::Error);
}

TEST(Service, HealthAndSummary) {
  SceneService svc(truth(), options());
  const auto h = json::parse(svc.health().body);
  EXPECT_EQ(h.at("status"), "ok");
  EXPECT_EQ(h.at("version"), 0);
  EXPECT_EQ(h.at("gaussians"), 20);
  const auto s = json::parse(svc.summary().body);
  EXPECT_EQ(s.at("labels").size(), 3u);
  EXPECT_EQ(s.at("labels")[0].at("label"), "coffee machine");
  EXPECT_EQ(s.at("labels")[0].at("gaussians"), 8);
  EXPECT_EQ(s.at("frames").size(), 10u);
  EXPECT_EQ(s.at("embedding_dim"), 16);
}

TEST(Service, RenderMatchesSharedPathAndPose) {
  SceneService svc(truth(), options());
  const auto r = svc.render({{"frame", "0"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "image/png");
  const auto expect = render_png(truth(), dataset().frames[0].camera, RasterConfig{});
  EXPECT_EQ(r.body, std::string(expect.begin(), expect.end()));
  EXPECT_EQ(svc.render({}).body, r.body);  // frame 0 by default

  // The same camera given as a pose renders the same bytes.
  const auto byPose = svc.render({{"pose", pose_param(dataset().frames[0].camera)}});
  ASSERT_EQ(byPose.status, 200);
  EXPECT_EQ(byPose.body, r.body);
}

TEST(Service, RenderRejectsBadParameters) {
  SceneService svc(truth(), options());
  EXPECT_EQ(svc.render({{"frame", "10"}}).status, 400);
  EXPECT_EQ(svc.render({{"frame", "1.5"}}).status, 400);
  EXPECT_EQ(svc.render({{"frame", "abc"}}).status, 400);
  EXPECT_EQ(svc.render({{"pose", "1,2,3"}}).status, 400);
  const auto err = json::parse(svc.render({{"frame", "-1"}}).body);
  EXPECT_EQ(err.at("error"), "invalid-parameter");

  ServiceOptions bare;
  SceneService no_dataset(truth(), bare);
  EXPECT_EQ(no_dataset.render({{"frame", "0"}}).status, 400);
  const auto pose = pose_param(dataset().frames[0].camera);
  EXPECT_EQ(no_dataset.render({{"pose", pose}}).status, 400);  // no intrinsics
  EXPECT_EQ(no_dataset.render({{"pose", pose}, {"width", "64"}, {"height", "64"}, {"fx", "72"}}).status, 200);
}

TEST(Service, QueryResolvesCoffeeToCoffeeMachine) {
  SceneService svc(truth(), options());
  const auto r = svc.query(R"({"prompt": "coffee", "frame": 1})");
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j.at("query"), "coffee");
  ASSERT_FALSE(j.at("ranked").empty());
  const auto& top = j.at("ranked")[0];
  EXPECT_EQ(top.at("label"), "coffee machine");
  EXPECT_GT(top.at("relevancy").get<double>(), 0.5);

  // The RLE mask is the library's mask for the same view.
  const auto lookup = io::load_query_lookup(test::fixture_path("synthetic/queries.bin"));
  const auto direct = resolve_query(truth(), lookup.vectors.at("coffee"), dataset().frames[1].camera);
  const auto& m = top.at("mask");
  EXPECT_EQ(decode_rle(m.at("counts").get<std::vector<std::uint32_t>>(), m.at("width"), m.at("height")),
            direct.ranked[0].mask);
  EXPECT_EQ(top.at("gaussians"), direct.ranked[0].gaussian_ids.size());
}

TEST(Service, QueryThresholdAndErrors) {
  SceneService svc(truth(), options());
  EXPECT_TRUE(json::parse(svc.query(R"({"prompt": "kettle", "threshold": 1.0})").body).at("ranked").empty());
  EXPECT_EQ(svc.query(R"({"prompt": "zebra"})").status, 503);
  EXPECT_EQ(svc.query(R"({"threshold": 0.5})").status, 400);
  EXPECT_EQ(svc.query(R"({"prompt": "kettle", "threshold": 2})").status, 400);
  EXPECT_EQ(svc.query("{not json").status, 400);
  EXPECT_EQ(svc.query(R"({"prompt": 5})").status, 400);
}

TEST(Service, EditRecolorChangesRenderButNotLabels) {
  test::TempDir dir;
  const std::string ckpt = dir.file("scene.ckpt");
  io::save_checkpoint(truth(), ckpt);
  SceneService svc(truth(), options(ckpt));
  const auto before_render = svc.render({{"frame", "0"}}).body;
  const auto before_query = ranked_labels(json::parse(svc.query(R"({"prompt": "coffee"})").body));

  const auto r = svc.edit(R"({"op": "recolor", "label": "kettle", "params": {"rgb": [0.1, 0.9, 0.1]}})");
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j.at("version"), 1);
  EXPECT_EQ(j.at("affected"), 6);
  EXPECT_NE(svc.render({{"frame", "0"}}).body, before_render);
  EXPECT_EQ(ranked_labels(json::parse(svc.query(R"({"prompt": "coffee"})").body)), before_query);

  // Saved atomically: the file holds the edited scene and nothing else is left behind.
  EXPECT_EQ(io::load_checkpoint(ckpt), svc.snapshot()->scene);
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1);
}

TEST(Service, EditOpsAndConflicts) {
  SceneService svc(truth(), options());
  EXPECT_EQ(svc.edit(R"({"op": "translate", "ids": [0, 1], "params": {"offset": [0, 0, 1]}, "expected_version": 0})").status,
            200);
  const auto stale = svc.edit(R"({"op": "delete", "label": "apple", "expected_version": 0})");
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(json::parse(stale.body).at("error"), "edit-conflict");
  EXPECT_EQ(svc.snapshot()->scene.gaussians.size(), 20u);
  EXPECT_EQ(svc.edit(R"({"op": "delete", "label": "apple", "expected_version": 1})").status, 200);
  EXPECT_EQ(svc.snapshot()->scene.gaussians.size(), 14u);
  EXPECT_EQ(svc.snapshot()->version, 2u);

  EXPECT_EQ(svc.edit(R"({"op": "explode", "label": "kettle"})").status, 400);
  EXPECT_EQ(svc.edit(R"({"op": "recolor", "label": "kettle"})").status, 400);
  EXPECT_EQ(svc.edit(R"({"op": "recolor", "label": "kettle", "ids": [1], "params": {"rgb": [0,0,0]}})").status, 400);
  EXPECT_EQ(svc.edit(R"({"op": "delete", "ids": [999]})").status, 400);
  EXPECT_EQ(svc.edit(R"({"op": "delete", "label": "teapot"})").status, 400);
  // Failed edits leave the version alone.
  EXPECT_EQ(svc.snapshot()->version, 2u);
}

// Readers racing an editor see either the old or the new scene, never a mix.
TEST(Service, ConcurrentReadersNeverSeeTornState) {
  SceneService svc(truth(), options());
  const Camera& cam = dataset().frames[0].camera;
  Scene<float> moved = truth();
  translate(moved, select_by_label(moved, "coffee machine"), Eigen::Vector3d(0.3, 0, 0));
  const auto png_a = render_png(truth(), cam, RasterConfig{});
  const auto png_b = render_png(moved, cam, RasterConfig{});
  const std::string a(png_a.begin(), png_a.end()), b(png_b.begin(), png_b.end());
  ASSERT_NE(a, b);

  std::atomic<bool> stop{false};
  std::atomic<int> torn{0}, reads{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 3; ++t) {
    readers.emplace_back([&] {
      while (!stop) {
        const auto body = svc.render({{"frame", "0"}}).body;
        if (body != a && body != b) ++torn;
        ++reads;
      }
    });
  }
  for (int i = 0; i < 20; ++i) {
    const double dx = i % 2 == 0 ? 0.3 : -0.3;
    const auto r = svc.edit(json({{"op", "translate"}, {"label", "coffee machine"}, {"params", {{"offset", {dx, 0, 0}}}}}).dump());
    ASSERT_EQ(r.status, 200);
  }
  while (reads < 40) std::this_thread::yield();
  stop = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(torn, 0);
}

TEST(Service, ServesOverHttp) {
  SceneService svc(truth(), options());
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto img = client.Get("/render?frame=2");
  ASSERT_TRUE(img);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(img->body, svc.render({{"frame", "2"}}).body);
  auto q = client.Post("/query", R"({"prompt": "tea"})", "application/json");
  ASSERT_TRUE(q);
  EXPECT_EQ(json::parse(q->body).at("ranked")[0].at("label"), "coffee machine");
  auto e = client.Post("/edit", R"({"op": "delete", "label": "kettle", "expected_version": 3})", "application/json");
  ASSERT_TRUE(e);
  EXPECT_EQ(e->status, 409);
  auto missing = client.Post("/query", R"({"prompt": "zebra"})", "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 503);
  auto summary = client.Get("/scene/summary");
  ASSERT_TRUE(summary);
  EXPECT_EQ(json::parse(summary->body).at("version"), 0);

  server.stop();
  th.join();
}
