#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli/commands.hpp"
#include "semsplat/io/checkpoint.hpp"
#include "semsplat/io/dataset_io.hpp"
#include "semsplat/io/png.hpp"
#include "service/service.hpp"
#include "temp_dir.hpp"

using namespace semsplat;
using namespace semsplat::cli;

namespace {

std::string fixture(const std::string& rel) { return test::fixture_path("synthetic/" + rel); }

QueryOptions coffee_query(const std::string& prompt) {
  QueryOptions q;
  q.checkpoint = fixture("ground_truth.ckpt");
  q.queries = fixture("queries.bin");
  q.view.dataset = test::fixture_path("synthetic");
  q.prompt = prompt;
  return q;
}

}  // namespace

TEST(Cli, QueryPrintsTheDisambiguatedLabelFirst) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_query(coffee_query("coffee"), out, err), 0) << err.str();
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "query 'coffee' → coffee machine (relevancy 0.71)");

  std::ostringstream tea;
  ASSERT_EQ(cmd_query(coffee_query("tea"), tea, err), 0);
  EXPECT_EQ(tea.str().rfind("query 'tea' → coffee machine (relevancy ", 0), 0u) << tea.str();
}

TEST(Cli, QueryWritesTopMask) {
  test::TempDir dir;
  auto q = coffee_query("kettle");
  q.out = dir.file("mask.png");
  q.view.frame = 4;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_query(q, out, err), 0) << err.str();
  const auto mask = io::read_png_rgb(q.out);
  EXPECT_EQ(mask.width, 64);
  double lit = 0;
  for (float v : mask.data) lit += v;
  EXPECT_GT(lit, 0.0);
}

TEST(Cli, QueryFailuresExitNonZero) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_query(coffee_query("zebra"), out, err), 1);
  EXPECT_NE(err.str().find("unavailable-encoder"), std::string::npos);
  auto q = coffee_query("coffee");
  q.checkpoint = "/nonexistent.ckpt";
  std::ostringstream err2;
  EXPECT_EQ(cmd_query(q, out, err2), 1);
  EXPECT_NE(err2.str().find("missing-file"), std::string::npos);
}

TEST(Cli, RenderMatchesServiceBytes) {
  test::TempDir dir;
  RenderOptions r;
  r.checkpoint = fixture("ground_truth.ckpt");
  r.view.dataset = test::fixture_path("synthetic");
  r.view.frame = 0;
  r.out = dir.file("f0.png");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_render(r, out, err), 0) << err.str();

  service::ServiceOptions opts;
  opts.dataset = io::load_dataset(test::fixture_path("synthetic"));
  service::SceneService svc(io::load_checkpoint(fixture("ground_truth.ckpt")), opts);
  const auto served = svc.render({{"frame", "0"}}).body;
  const auto written = test::read_bytes(r.out);
  EXPECT_EQ(std::string(written.begin(), written.end()), served);
}

TEST(Cli, TrainWritesCheckpointAndLog) {
  test::TempDir dir;
  TrainOptions t;
  t.dataset = test::fixture_path("synthetic");
  t.config = fixture("train.json");
  t.iterations = 12;
  t.out = dir.file("s.ckpt");
  t.log_path = dir.file("log.jsonl");
  t.print_every = 5;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(t, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("iter 10 "), std::string::npos);
  const auto scene = io::load_checkpoint(t.out);
  EXPECT_EQ(scene.dictionary.size(), 3);
  std::ifstream log(t.log_path);
  std::string line;
  int n = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("iteration"), ++n);
  }
  EXPECT_EQ(n, 12);
}

TEST(Cli, EvalReportsPerfectGroundTruth) {
  test::TempDir dir;
  EvalOptions e;
  e.checkpoint = fixture("ground_truth.ckpt");
  e.dataset = test::fixture_path("synthetic");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_eval(e, out, err), 0) << err.str();
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j.at("miou"), 1.0);
  EXPECT_GT(j.at("psnr").get<double>(), 40.0);
  EXPECT_EQ(j.at("name"), "ground_truth");

  e.dataset = test::fixture_path("corrupted/missing_image");
  std::ostringstream err2;
  EXPECT_EQ(cmd_eval(e, out, err2), 1);
  EXPECT_NE(err2.str().find("missing-file"), std::string::npos);
}
