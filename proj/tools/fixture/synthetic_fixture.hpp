#pragma once

#include <string>
#include <vector>

#include "semsplat/dataset.hpp"
#include "semsplat/scene.hpp"
#include "semsplat/semantics.hpp"

namespace semsplat::fixture {

/// Three-object tabletop: 20 ground-truth Gaussians labeled "coffee
/// machine", "kettle" and "apple", seen by 10 ring cameras at 64x64 over a
/// black background. Embeddings are hand-placed in 16 dimensions so that
/// the prompts "coffee" and "tea" are nearest to "coffee machine".
struct SyntheticFixture {
  Scene<float> truth;
  Dataset dataset;
  QueryLookup queries;
  std::string config_json;
};

SyntheticFixture make_synthetic();

/// Writes `<dir>/synthetic/` (dataset, ground_truth.ckpt, queries.bin,
/// train.json) and `<dir>/corrupted/<case>/` for every validation failure
/// case. Output bytes are a pure function of the generator.
void write_fixtures(const std::string& dir);

struct CorruptCase {
  std::string name;
  std::string expected_error;  // error_code_name() of the expected failure
};
const std::vector<CorruptCase>& corrupt_cases();

}  // namespace semsplat::fixture
