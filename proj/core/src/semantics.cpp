#include "semsplat/semantics.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "semsplat/error.hpp"

namespace semsplat {

template <typename Real>
std::vector<Real> class_probabilities(const Real* feature, const SemanticHead<Real>& head) {
  std::vector<Real> p(static_cast<std::size_t>(head.num_classes()));
  head.logits(feature, p.data());
  const Real top = *std::max_element(p.begin(), p.end());
  Real sum = 0;
  for (auto& v : p) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

template <typename Real>
int argmax_class(const Real* feature, const SemanticHead<Real>& head) {
  int best = 0;
  Real best_v = 0;
  for (int k = 0; k < head.num_classes(); ++k) {
    const Real* a = &head.weight[static_cast<std::size_t>(k) * kSemanticDim];
    const Real v = a[0] * feature[0] + a[1] * feature[1] + a[2] * feature[2] + head.bias[k];
    if (k == 0 || v > best_v) {
      best = k;
      best_v = v;
    }
  }
  return best;
}

template <typename Real>
LabelMap pixel_label_map(const Image<Real>& feature_map, const SemanticHead<Real>& head) {
  if (feature_map.channels != kSemanticDim) throw_invalid("feature map must have 3 channels");
  LabelMap out(feature_map.width, feature_map.height, 1);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    out.data[p] = static_cast<std::uint16_t>(argmax_class(&feature_map.data[p * 3], head));
  }
  return out;
}

namespace {

template <typename T>
void require_unit(std::span<const T> v, const char* what) {
  double sq = 0.0;
  for (T x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  if (!std::isfinite(sq) || std::abs(std::sqrt(sq) - 1.0) > 1e-3) {
    throw_invalid(std::string("relevancy: ") + what + " embedding is not unit norm");
  }
}

template <typename T>
double dot(std::span<const T> a, std::span<const T> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

}  // namespace

template <typename T>
double relevancy(std::span<const T> entry, std::span<const T> query, std::span<const T> negatives) {
  const std::size_t dim = entry.size();
  if (dim == 0 || query.size() != dim) throw_invalid("relevancy: embedding dimensions differ");
  if (negatives.empty() || negatives.size() % dim != 0) {
    throw_invalid("relevancy: negatives must be a non-empty multiple of the dimension");
  }
  require_unit(entry, "entry");
  require_unit(query, "query");
  const double dq = dot(entry, query);
  double best = 1.0;
  for (std::size_t off = 0; off < negatives.size(); off += dim) {
    const auto neg = negatives.subspan(off, dim);
    require_unit(neg, "negative");
    // exp(a) / (exp(a) + exp(b)) without overflow.
    const double r = 1.0 / (1.0 + std::exp(dot(entry, neg) - dq));
    best = std::min(best, r);
  }
  return best;
}

std::vector<double> entry_relevancies(const EmbeddingTable& table, std::span<const float> query) {
  if (static_cast<int>(query.size()) != table.dim) {
    throw Error(ErrorCode::kConfiguration, "query embedding has dimension " +
                                               std::to_string(query.size()) + ", table has " +
                                               std::to_string(table.dim));
  }
  std::vector<double> out(table.entry_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = relevancy<float>(table.entry(static_cast<int>(i) + 1), query,
                              std::span<const float>(table.negative_vectors));
  }
  return out;
}

template <typename Real>
std::vector<std::uint32_t> gaussians_of_class(const Scene<Real>& scene, int index) {
  std::vector<std::uint32_t> ids;
  const auto& g = scene.gaussians;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (argmax_class(&g.semantics[3 * i], scene.head) == index) {
      ids.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return ids;
}

template <typename Real>
QueryResult resolve_query(const Scene<Real>& scene, std::span<const float> query_embedding,
                          const Camera& camera, double threshold, const std::string& query_text,
                          const RasterConfig& cfg) {
  if (scene.embeddings.empty()) throw Error(ErrorCode::kConfiguration, "scene has no embedding table");
  if (static_cast<int>(scene.embeddings.entry_count()) != scene.dictionary.size()) {
    throw Error(ErrorCode::kConfiguration, "embedding table does not cover the dictionary");
  }
  QueryResult result;
  result.query = query_text;
  result.threshold = threshold;
  const std::vector<double> rel = entry_relevancies(scene.embeddings, query_embedding);

  std::vector<int> related;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (rel[i] > threshold) related.push_back(static_cast<int>(i) + 1);
  }
  if (related.empty()) return result;
  std::stable_sort(related.begin(), related.end(),
                   [&](int a, int b) { return rel[a - 1] > rel[b - 1]; });

  const RenderOutput<Real> out = render(scene, camera, cfg);
  const LabelMap labels = pixel_label_map(out.feature, scene.head);
  const auto& g = scene.gaussians;
  std::vector<int> gauss_class(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) gauss_class[i] = argmax_class(&g.semantics[3 * i], scene.head);

  for (int index : related) {
    RankedLabel r;
    r.index = index;
    r.label = scene.dictionary.label_of(index);
    r.relevancy = rel[index - 1];
    r.mask = label_mask(labels, index);
    double wsum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (gauss_class[i] != index) continue;
      r.gaussian_ids.push_back(static_cast<std::uint32_t>(i));
      const double w = static_cast<double>(g.opacity(i));
      r.centroid += w * g.mean(i).template cast<double>();
      wsum += w;
    }
    if (wsum > 0.0) r.centroid /= wsum;
    result.ranked.push_back(std::move(r));
  }
  return result;
}

template <typename Real>
Image<float> relevancy_map(const Scene<Real>& scene, std::span<const float> query_embedding,
                           const Camera& camera, const RasterConfig& cfg) {
  const std::vector<double> rel = entry_relevancies(scene.embeddings, query_embedding);
  const RenderOutput<Real> out = render(scene, camera, cfg);
  Image<float> map(camera.width, camera.height, 1);
  for (std::size_t p = 0; p < map.pixel_count(); ++p) {
    const std::vector<Real> prob = class_probabilities(&out.feature.data[p * 3], scene.head);
    double s = 0.0;
    for (std::size_t k = 1; k < prob.size() && k - 1 < rel.size(); ++k) s += prob[k] * rel[k - 1];
    map.data[p] = static_cast<float>(s);
  }
  return map;
}

HttpTextEncoder::HttpTextEncoder(std::string url, double timeout_seconds)
    : url_(std::move(url)), timeout_(timeout_seconds) {}

std::vector<std::vector<float>> HttpTextEncoder::encode(const std::vector<std::string>& texts) {
  httplib::Client client(url_);
  const auto secs = static_cast<time_t>(timeout_);
  const auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  const nlohmann::json body = {{"texts", texts}};
  auto res = client.Post("/encode", body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kUnavailableEncoder,
                "encoder at " + url_ + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kUnavailableEncoder,
                "encoder at " + url_ + " answered HTTP " + std::to_string(res->status));
  }
  std::vector<std::vector<float>> out;
  try {
    const auto j = nlohmann::json::parse(res->body);
    out = j.at("embeddings").get<std::vector<std::vector<float>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "encoder response is malformed: " + std::string(e.what()));
  }
  if (out.size() != texts.size()) {
    throw Error(ErrorCode::kLengthMismatch, "encoder returned " + std::to_string(out.size()) +
                                                " embeddings for " + std::to_string(texts.size()) +
                                                " texts");
  }
  return out;
}

std::vector<float> QueryEmbedder::embed(const std::string& text, int expected_dim) const {
  std::vector<float> v;
  if (lookup_) {
    auto it = lookup_->vectors.find(text);
    if (it != lookup_->vectors.end()) v = it->second;
  }
  if (v.empty()) {
    if (!encoder_) {
      throw Error(ErrorCode::kUnavailableEncoder,
                  "prompt '" + text + "' is not in the lookup and no encoder is configured");
    }
    v = encoder_->encode({text}).at(0);
  }
  if (static_cast<int>(v.size()) != expected_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding for '" + text + "' has dimension " +
                                                   std::to_string(v.size()) + ", expected " +
                                                   std::to_string(expected_dim));
  }
  return normalized(v);
}

template std::vector<float> class_probabilities(const float*, const SemanticHead<float>&);
template std::vector<double> class_probabilities(const double*, const SemanticHead<double>&);
template int argmax_class(const float*, const SemanticHead<float>&);
template int argmax_class(const double*, const SemanticHead<double>&);
template LabelMap pixel_label_map(const Image<float>&, const SemanticHead<float>&);
template LabelMap pixel_label_map(const Image<double>&, const SemanticHead<double>&);
template double relevancy(std::span<const float>, std::span<const float>, std::span<const float>);
template double relevancy(std::span<const double>, std::span<const double>,
                          std::span<const double>);
template std::vector<std::uint32_t> gaussians_of_class(const Scene<float>&, int);
template std::vector<std::uint32_t> gaussians_of_class(const Scene<double>&, int);
template QueryResult resolve_query(const Scene<float>&, std::span<const float>, const Camera&,
                                   double, const std::string&, const RasterConfig&);
template QueryResult resolve_query(const Scene<double>&, std::span<const float>, const Camera&,
                                   double, const std::string&, const RasterConfig&);
template Image<float> relevancy_map(const Scene<float>&, std::span<const float>, const Camera&,
                                    const RasterConfig&);
template Image<float> relevancy_map(const Scene<double>&, std::span<const float>, const Camera&,
                                    const RasterConfig&);

}  // namespace semsplat
