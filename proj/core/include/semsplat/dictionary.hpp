#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semsplat {

inline constexpr std::string_view kUndetectedLabel = "undetected";

/// Ordered label table. Entry i (1-based) is logit i of the semantic head;
/// index 0 is the reserved undetected class.
class SemanticDictionary {
 public:
  SemanticDictionary() = default;
  explicit SemanticDictionary(const std::vector<std::string>& labels);

  /// Index of `label`, inserting it at the end when absent.
  int add(const std::string& label);
  /// Throws invalid-parameter for unknown labels.
  int lookup(std::string_view label) const;
  std::optional<int> find(std::string_view label) const;
  const std::string& label_of(int index) const;
  bool contains(std::string_view label) const { return find(label).has_value(); }

  /// Number of entries N, not counting the undetected slot.
  int size() const { return static_cast<int>(entries_.size()); }
  int num_classes() const { return size() + 1; }
  const std::vector<std::string>& entries() const { return entries_; }

  bool operator==(const SemanticDictionary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
};

inline const std::vector<std::string>& default_negative_phrases() {
  static const std::vector<std::string> phrases = {"object", "things", "stuff", "texture"};
  return phrases;
}

/// Unit-norm text embeddings for every dictionary entry plus the canonical
/// negative phrases used by the relevancy score.
struct EmbeddingTable {
  int dim = 0;
  std::vector<float> entry_vectors;     // N x dim, row i-1 belongs to entry i
  std::vector<float> negative_vectors;  // M x dim
  std::vector<std::string> negative_phrases;

  bool empty() const { return dim == 0; }
  std::size_t entry_count() const { return dim ? entry_vectors.size() / dim : 0; }
  std::size_t negative_count() const { return negative_phrases.size(); }
  /// Embedding of dictionary entry `index` (1-based).
  std::span<const float> entry(int index) const;
  std::span<const float> negative(std::size_t i) const;

  void add_entry(std::span<const float> v);
  void add_negative(const std::string& phrase, std::span<const float> v);

  /// Throws dimension-mismatch / not-unit-norm errors describing the first
  /// violated invariant. `expected_entries` is the dictionary size.
  void validate(int expected_entries) const;

  bool operator==(const EmbeddingTable&) const = default;
};

/// Returns `v / |v|`; throws invalid-parameter for zero or non-finite input.
std::vector<float> normalized(std::span<const float> v);

}  // namespace semsplat
