#include <CLI11.hpp>

#include <iostream>

#include "fixture/synthetic_fixture.hpp"
#include "semsplat/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regenerates the synthetic test fixtures"};
  std::string out = "tests/fixtures";
  app.add_option("out", out, "Output directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    semsplat::fixture::write_fixtures(out);
  } catch (const semsplat::Error& e) {
    std::cerr << "make_fixture: " << e.what() << "\n";
    return 1;
  }
  std::cout << "fixtures written to " << out << "\n";
  return 0;
}
