#include "semsplat/scene.hpp"

#include <cmath>

#include "semsplat/error.hpp"

namespace semsplat {

template <typename Real>
bool SemanticHead<Real>::all_finite() const {
  for (Real v : weight) {
    if (!std::isfinite(v)) return false;
  }
  for (Real v : bias) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename Real>
void Scene<Real>::validate() const {
  if (!gaussians.consistent()) {
    throw Error(ErrorCode::kConfiguration, "gaussian arrays have unequal lengths");
  }
  if (head.weight.size() != head.bias.size() * kSemanticDim) {
    throw Error(ErrorCode::kConfiguration, "semantic head weight/bias shapes disagree");
  }
  if (head.num_classes() != dictionary.num_classes()) {
    throw Error(ErrorCode::kConfiguration,
                "semantic head has " + std::to_string(head.num_classes()) +
                    " classes but the dictionary needs " +
                    std::to_string(dictionary.num_classes()));
  }
  if (!embeddings.empty()) embeddings.validate(dictionary.size());
}

template struct SemanticHead<float>;
template struct SemanticHead<double>;
template struct Scene<float>;
template struct Scene<double>;

}  // namespace semsplat
