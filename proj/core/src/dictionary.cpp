#include "semsplat/dictionary.hpp"

#include <cmath>

#include "semsplat/error.hpp"

namespace semsplat {

SemanticDictionary::SemanticDictionary(const std::vector<std::string>& labels) {
  for (const auto& label : labels) {
    if (contains(label)) {
      throw Error(ErrorCode::kDuplicateLabel, "dictionary label '" + label + "' repeats");
    }
    add(label);
  }
}

int SemanticDictionary::add(const std::string& label) {
  if (label.empty() || label == kUndetectedLabel) {
    throw_invalid("'" + label + "' cannot be a dictionary entry");
  }
  if (auto existing = find(label)) return *existing;
  entries_.push_back(label);
  const int index = static_cast<int>(entries_.size());
  index_.emplace(label, index);
  return index;
}

std::optional<int> SemanticDictionary::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int SemanticDictionary::lookup(std::string_view label) const {
  if (auto index = find(label)) return *index;
  throw_invalid("label '" + std::string(label) + "' is not in the dictionary");
}

const std::string& SemanticDictionary::label_of(int index) const {
  static const std::string undetected(kUndetectedLabel);
  if (index == 0) return undetected;
  if (index < 0 || index > size()) {
    throw_invalid("dictionary index " + std::to_string(index) + " out of range");
  }
  return entries_[static_cast<std::size_t>(index - 1)];
}

std::span<const float> EmbeddingTable::entry(int index) const {
  if (index < 1 || static_cast<std::size_t>(index) > entry_count()) {
    throw_invalid("embedding entry " + std::to_string(index) + " out of range");
  }
  return {entry_vectors.data() + static_cast<std::size_t>(index - 1) * dim,
          static_cast<std::size_t>(dim)};
}

std::span<const float> EmbeddingTable::negative(std::size_t i) const {
  return {negative_vectors.data() + i * dim, static_cast<std::size_t>(dim)};
}

void EmbeddingTable::add_entry(std::span<const float> v) {
  if (static_cast<int>(v.size()) != dim) throw_invalid("embedding dimension mismatch");
  entry_vectors.insert(entry_vectors.end(), v.begin(), v.end());
}

void EmbeddingTable::add_negative(const std::string& phrase, std::span<const float> v) {
  if (static_cast<int>(v.size()) != dim) throw_invalid("embedding dimension mismatch");
  negative_phrases.push_back(phrase);
  negative_vectors.insert(negative_vectors.end(), v.begin(), v.end());
}

namespace {

double norm_of(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace

void EmbeddingTable::validate(int expected_entries) const {
  if (dim <= 0) throw Error(ErrorCode::kDimensionMismatch, "embedding dimension must be positive");
  if (entry_vectors.size() % dim != 0 || negative_vectors.size() != negative_phrases.size() * dim) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding arrays are not a multiple of dim");
  }
  if (static_cast<int>(entry_count()) != expected_entries) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding table has " + std::to_string(entry_count()) +
                    " entry rows but the dictionary has " + std::to_string(expected_entries));
  }
  if (negative_phrases.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding table needs at least one negative");
  }
  for (std::size_t i = 0; i < entry_count(); ++i) {
    const double n = norm_of(entry(static_cast<int>(i) + 1));
    if (std::abs(n - 1.0) > 1e-5) {
      throw Error(ErrorCode::kNotUnitNorm, "entry row " + std::to_string(i + 1) +
                                               " has norm " + std::to_string(n));
    }
  }
  for (std::size_t i = 0; i < negative_count(); ++i) {
    const double n = norm_of(negative(i));
    if (std::abs(n - 1.0) > 1e-5) {
      throw Error(ErrorCode::kNotUnitNorm,
                  "negative '" + negative_phrases[i] + "' has norm " + std::to_string(n));
    }
  }
}

std::vector<float> normalized(std::span<const float> v) {
  const double n = norm_of(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw_invalid("cannot normalize a zero or non-finite vector");
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

}  // namespace semsplat
