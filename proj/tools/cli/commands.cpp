#include "cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "semsplat/error.hpp"
#include "semsplat/evaluate.hpp"
#include "semsplat/io/checkpoint.hpp"
#include "semsplat/io/config.hpp"
#include "semsplat/io/dataset_io.hpp"
#include "semsplat/io/png.hpp"
#include "semsplat/trainer.hpp"
#include "service/service.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <CLI11.hpp>
#include <httplib.h>

namespace semsplat::cli {

namespace {

std::optional<Dataset> maybe_dataset(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return io::load_dataset(path);
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
}

template <typename Fn>
int reported(const char* name, std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "semsplat " << name << ": " << e.what() << "\n";
    return 1;
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::map<std::string, std::string> ViewOptions::params() const {
  std::map<std::string, std::string> p;
  if (frame) p["frame"] = std::to_string(*frame);
  if (!pose.empty()) p["pose"] = pose;
  if (width) p["width"] = std::to_string(*width);
  if (height) p["height"] = std::to_string(*height);
  if (fx) p["fx"] = fixed(*fx, 9);
  return p;
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  return reported("train", err, [&] {
    const Dataset ds = io::load_dataset(o.dataset);
    io::RunConfig cfg = o.config.empty() ? io::RunConfig{} : io::load_config(o.config);
    if (o.iterations) cfg.train.iterations = *o.iterations;
    if (o.seed) cfg.train.seed = *o.seed;
    std::ofstream log;
    if (!o.log_path.empty()) {
      log.open(o.log_path);
      if (!log) throw Error(ErrorCode::kIo, "cannot write " + o.log_path);
    }
    const auto t0 = std::chrono::steady_clock::now();
    Trainer trainer(ds, cfg.train, cfg.loss);
    trainer.run([&](const IterationMetrics& m) {
      if (log.is_open()) log << m.to_json() << "\n";
      if (o.print_every > 0 && m.iteration % o.print_every == 0) {
        out << "iter " << m.iteration << "  l_gs " << fixed(m.l_gs, 4) << "  l_ce " << fixed(m.l_ce, 4)
            << "  psnr " << fixed(m.psnr, 2) << "  gaussians " << m.num_gaussians << "\n";
      }
    });
    io::save_checkpoint(trainer.scene(), o.out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "wrote " << o.out << " (" << trainer.scene().gaussians.size() << " gaussians, "
        << fixed(secs, 1) << " s)\n";
    return 0;
  });
}

int cmd_render(const RenderOptions& o, std::ostream& out, std::ostream& err) {
  return reported("render", err, [&] {
    const Scene<float> scene = io::load_checkpoint(o.checkpoint);
    const Camera cam = service::camera_from_params(o.view.params(), maybe_dataset(o.view.dataset));
    write_file(o.out, service::render_png(scene, cam, RasterConfig{}));
    out << "wrote " << o.out << " (" << cam.width << "x" << cam.height << ")\n";
    return 0;
  });
}

int cmd_query(const QueryOptions& o, std::ostream& out, std::ostream& err) {
  return reported("query", err, [&] {
    const Scene<float> scene = io::load_checkpoint(o.checkpoint);
    if (scene.embeddings.empty()) throw Error(ErrorCode::kConfiguration, "checkpoint has no embedding table");
    const Camera cam = service::camera_from_params(o.view.params(), maybe_dataset(o.view.dataset));
    const QueryEmbedder embedder = service::make_embedder(o.queries, o.encoder);
    const auto emb = embedder.embed(o.prompt, scene.embeddings.dim);
    const QueryResult r = resolve_query(scene, emb, cam, o.threshold, o.prompt);
    if (r.ranked.empty()) {
      out << "query '" << o.prompt << "' → no label above threshold " << fixed(o.threshold, 2) << "\n";
    } else {
      out << "query '" << o.prompt << "' → " << r.ranked[0].label << " (relevancy "
          << fixed(r.ranked[0].relevancy, 2) << ")\n";
      for (std::size_t i = 1; i < r.ranked.size(); ++i) {
        out << "  " << r.ranked[i].label << " (relevancy " << fixed(r.ranked[i].relevancy, 2) << ")\n";
      }
    }
    if (!o.out.empty()) {
      Mask mask(cam.width, cam.height, 1);
      if (!r.ranked.empty()) {
        for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = r.ranked[0].mask.data[i] ? 255 : 0;
      }
      io::write_png_gray(o.out, mask);
    }
    return 0;
  });
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  return reported("eval", err, [&] {
    const Scene<float> scene = io::load_checkpoint(o.checkpoint);
    const Dataset ds = io::load_dataset(o.dataset);
    const EvalReport report =
        evaluate(scene, ds, RasterConfig{}, std::filesystem::path(o.checkpoint).stem().string());
    if (o.out.empty()) {
      out << report.to_json() << "\n";
    } else {
      std::ofstream f(o.out);
      f << report.to_json() << "\n";
      if (!f) throw Error(ErrorCode::kIo, "cannot write " + o.out);
      out << "psnr " << fixed(report.psnr, 2) << "  ssim " << fixed(report.ssim, 4) << "  miou "
          << fixed(report.miou, 4) << "  -> " << o.out << "\n";
    }
    return 0;
  });
}

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  return reported("serve", err, [&] {
    service::ServiceOptions opts;
    if (o.save_on_edit) opts.checkpoint_path = o.checkpoint;
    opts.dataset = maybe_dataset(o.dataset);
    opts.embedder = service::make_embedder(o.queries, o.encoder);
    service::SceneService svc(io::load_checkpoint(o.checkpoint), std::move(opts));
    httplib::Server server;
    svc.mount(server);
    if (!server.bind_to_port(o.host, o.port)) {
      throw Error(ErrorCode::kIo, "cannot bind " + o.host + ":" + std::to_string(o.port));
    }
    out << "listening on http://" << o.host << ":" << o.port << std::endl;
    server.listen_after_bind();
    return 0;
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Semantic Gaussian splatting: train, render, query, evaluate and serve scenes"};
  app.require_subcommand(1);

  auto add_view = [](CLI::App* sub, ViewOptions& v) {
    sub->add_option("--dataset", v.dataset, "Dataset directory (cameras for --frame)");
    sub->add_option("--frame", v.frame, "Frame index in the dataset");
    sub->add_option("--pose", v.pose, "16 comma-separated camera-to-world values, row-major");
    sub->add_option("--width", v.width, "Image width for --pose");
    sub->add_option("--height", v.height, "Image height for --pose");
    sub->add_option("--fx", v.fx, "Focal length in pixels for --pose");
  };

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train a scene from a dataset");
  t->add_option("--dataset", train.dataset, "Dataset directory")->required();
  t->add_option("--config", train.config, "Training config JSON");
  t->add_option("--out", train.out, "Output checkpoint")->required();
  t->add_option("--iterations", train.iterations, "Override train.iterations");
  t->add_option("--seed", train.seed, "Override train.seed");
  t->add_option("--log", train.log_path, "Per-iteration metrics (JSON lines)");
  t->add_option("--print-every", train.print_every, "Progress line interval")->capture_default_str();

  RenderOptions render;
  auto* r = app.add_subcommand("render", "Render a view to PNG");
  r->add_option("--checkpoint", render.checkpoint, "Scene checkpoint")->required();
  add_view(r, render.view);
  r->add_option("--out", render.out, "Output PNG")->required();

  QueryOptions query;
  auto* q = app.add_subcommand("query", "Resolve a text prompt to scene labels");
  q->add_option("--checkpoint", query.checkpoint, "Scene checkpoint")->required();
  q->add_option("--prompt", query.prompt, "Text prompt")->required();
  q->add_option("--threshold", query.threshold, "Relevancy threshold")->capture_default_str();
  q->add_option("--queries", query.queries, "Query embedding lookup file");
  q->add_option("--encoder", query.encoder, "Text encoder service URL");
  q->add_option("--out", query.out, "Mask PNG of the top label");
  add_view(q, query.view);

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint against a dataset");
  e->add_option("--checkpoint", eval.checkpoint, "Scene checkpoint")->required();
  e->add_option("--dataset", eval.dataset, "Dataset directory")->required();
  e->add_option("--out", eval.out, "Report JSON");

  ServeOptions serve;
  auto* s = app.add_subcommand("serve", "Serve render/query/edit over HTTP");
  s->add_option("--checkpoint", serve.checkpoint, "Scene checkpoint")->required();
  s->add_option("--dataset", serve.dataset, "Dataset directory (frame cameras)");
  s->add_option("--queries", serve.queries, "Query embedding lookup file");
  s->add_option("--encoder", serve.encoder, "Text encoder service URL");
  s->add_option("--host", serve.host, "Bind address")->capture_default_str();
  s->add_option("--port", serve.port, "Port")->capture_default_str();
  s->add_flag("!--no-save", serve.save_on_edit, "Do not write edits back to the checkpoint");

  CLI11_PARSE(app, argc, argv);
  if (t->parsed()) return cmd_train(train, std::cout, std::cerr);
  if (r->parsed()) return cmd_render(render, std::cout, std::cerr);
  if (q->parsed()) return cmd_query(query, std::cout, std::cerr);
  if (e->parsed()) return cmd_eval(eval, std::cout, std::cerr);
  return cmd_serve(serve, std::cout, std::cerr);
}

}  // namespace semsplat::cli
