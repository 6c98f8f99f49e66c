#pragma once

#include <array>
#include <span>
#include <vector>

#include "semsplat/dictionary.hpp"
#include "semsplat/gaussians.hpp"

namespace semsplat {

/// Affine map from a 3-dim semantic feature to N+1 class logits. Row 0 is
/// the undetected class.
template <typename Real>
struct SemanticHead {
  std::vector<Real> weight;  // (N+1) x 3, row-major
  std::vector<Real> bias;    // N+1

  SemanticHead() = default;
  explicit SemanticHead(int num_classes)
      : weight(static_cast<std::size_t>(num_classes) * kSemanticDim, Real(0)),
        bias(static_cast<std::size_t>(num_classes), Real(0)) {}

  int num_classes() const { return static_cast<int>(bias.size()); }

  void logits(const Real* feature, Real* out) const {
    for (int k = 0; k < num_classes(); ++k) {
      const Real* a = &weight[static_cast<std::size_t>(k) * kSemanticDim];
      out[k] = a[0] * feature[0] + a[1] * feature[1] + a[2] * feature[2] + bias[k];
    }
  }

  /// Appends zero rows until the head covers `num_classes` logits.
  void pad_to(int num_classes) {
    if (num_classes <= this->num_classes()) return;
    weight.resize(static_cast<std::size_t>(num_classes) * kSemanticDim, Real(0));
    bias.resize(static_cast<std::size_t>(num_classes), Real(0));
  }

  bool all_finite() const;

  template <typename Other>
  SemanticHead<Other> cast() const {
    SemanticHead<Other> out;
    out.weight.assign(weight.begin(), weight.end());
    out.bias.assign(bias.begin(), bias.end());
    return out;
  }

  bool operator==(const SemanticHead&) const = default;
};

template <typename Real>
struct Scene {
  GaussianSoA<Real> gaussians;
  SemanticHead<Real> head;
  SemanticDictionary dictionary;
  EmbeddingTable embeddings;
  std::array<Real, 3> background{Real(0), Real(0), Real(0)};

  Scene() = default;
  Scene(int sh_degree, SemanticDictionary dict)
      : gaussians(sh_degree), head(dict.num_classes()), dictionary(std::move(dict)) {}

  int sh_degree() const { return gaussians.sh_degree(); }

  /// Throws configuration errors when array lengths or the head size
  /// disagree with the dictionary.
  void validate() const;

  template <typename Other>
  Scene<Other> cast() const {
    Scene<Other> out;
    out.gaussians = gaussians.template cast<Other>();
    out.head = head.template cast<Other>();
    out.dictionary = dictionary;
    out.embeddings = embeddings;
    for (int c = 0; c < 3; ++c) out.background[c] = static_cast<Other>(background[c]);
    return out;
  }

  bool operator==(const Scene&) const = default;
};

}  // namespace semsplat
