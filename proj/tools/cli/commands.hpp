#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace semsplat::cli {

struct TrainOptions {
  std::string dataset;
  std::string config;  // empty: built-in defaults
  std::string out;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  std::string log_path;  // JSON lines, one record per iteration
  int print_every = 100;
};

/// Camera selection shared by render and query: a frame index into the
/// dataset, or a pose with explicit intrinsics.
struct ViewOptions {
  std::string dataset;
  std::optional<int> frame;
  std::string pose;  // 16 comma-separated camera-to-world values
  std::optional<int> width;
  std::optional<int> height;
  std::optional<double> fx;

  std::map<std::string, std::string> params() const;
};

struct RenderOptions {
  std::string checkpoint;
  ViewOptions view;
  std::string out;
};

struct QueryOptions {
  std::string checkpoint;
  ViewOptions view;
  std::string prompt;
  double threshold = 0.5;
  std::string queries;  // lookup file
  std::string encoder;  // http://host:port
  std::string out;      // mask PNG of the top label
};

struct EvalOptions {
  std::string checkpoint;
  std::string dataset;
  std::string out;  // report JSON; stdout when empty
};

struct ServeOptions {
  std::string checkpoint;
  std::string dataset;
  std::string queries;
  std::string encoder;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool save_on_edit = true;
};

// Each command returns a process exit code; failures are reported on `err`.
int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err);
int cmd_render(const RenderOptions& o, std::ostream& out, std::ostream& err);
int cmd_query(const QueryOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err);
/// Blocks until the server stops.
int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err);

/// Full command line of the `semsplat` executable.
int run(int argc, char** argv);

}  // namespace semsplat::cli
