#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semsplat/metrics.hpp"
#include "semsplat/rasterizer.hpp"
#include "semsplat/scene.hpp"

namespace semsplat {

/// softmax(A f + b) over the undetected class and every dictionary entry.
template <typename Real>
std::vector<Real> class_probabilities(const Real* feature, const SemanticHead<Real>& head);

/// Index of the largest logit; ties go to the lowest index.
template <typename Real>
int argmax_class(const Real* feature, const SemanticHead<Real>& head);

template <typename Real>
LabelMap pixel_label_map(const Image<Real>& feature_map, const SemanticHead<Real>& head);

/// min_i exp(d.q) / (exp(d.q) + exp(d.n_i)) over the negatives, stored as
/// consecutive rows of length entry.size(). Inputs must be unit norm
/// within 1e-3.
template <typename T>
double relevancy(std::span<const T> entry, std::span<const T> query, std::span<const T> negatives);

/// Relevancy of every dictionary entry (index i-1 holds entry i).
std::vector<double> entry_relevancies(const EmbeddingTable& table, std::span<const float> query);

struct RankedLabel {
  std::string label;
  int index = 0;  // dictionary index, never 0
  double relevancy = 0.0;
  Mask mask;      // pixels whose argmax class is this entry
  std::vector<std::uint32_t> gaussian_ids;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();  // opacity-weighted
};

struct QueryResult {
  std::string query;
  double threshold = 0.5;
  std::vector<RankedLabel> ranked;  // relevancy descending
};

/// Scores every entry against the query, keeps those strictly above
/// `threshold`, and localizes each in the rendered view and in 3D.
template <typename Real>
QueryResult resolve_query(const Scene<Real>& scene, std::span<const float> query_embedding,
                          const Camera& camera, double threshold = 0.5,
                          const std::string& query_text = {}, const RasterConfig& cfg = {});

/// Per-pixel relevancy: sum over entries of P(entry | pixel) * relevancy.
template <typename Real>
Image<float> relevancy_map(const Scene<Real>& scene, std::span<const float> query_embedding,
                           const Camera& camera, const RasterConfig& cfg = {});

/// Gaussians whose own semantic code maps to class `index`.
template <typename Real>
std::vector<std::uint32_t> gaussians_of_class(const Scene<Real>& scene, int index);

/// Precomputed prompt embeddings.
struct QueryLookup {
  int dim = 0;
  std::map<std::string, std::vector<float>> vectors;
};

/// Live text encoder: turns prompts into embeddings.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::vector<std::vector<float>> encode(const std::vector<std::string>& texts) = 0;
};

/// Client for an encoder service answering POST /encode {"texts": [...]}
/// with {"embeddings": [[...], ...]}.
class HttpTextEncoder : public TextEncoder {
 public:
  /// `url` is "http://host:port".
  explicit HttpTextEncoder(std::string url, double timeout_seconds = 10.0);
  std::vector<std::vector<float>> encode(const std::vector<std::string>& texts) override;

 private:
  std::string url_;
  double timeout_;
};

/// Resolves prompts to unit embeddings, preferring the lookup file and
/// falling back to the encoder. Throws unavailable-encoder when neither
/// can answer.
class QueryEmbedder {
 public:
  QueryEmbedder() = default;
  QueryEmbedder(std::optional<QueryLookup> lookup, std::shared_ptr<TextEncoder> encoder)
      : lookup_(std::move(lookup)), encoder_(std::move(encoder)) {}

  std::vector<float> embed(const std::string& text, int expected_dim) const;
  bool has_encoder() const { return encoder_ != nullptr; }

 private:
  std::optional<QueryLookup> lookup_;
  std::shared_ptr<TextEncoder> encoder_;
};

}  // namespace semsplat
