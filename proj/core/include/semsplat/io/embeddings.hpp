#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsplat/dictionary.hpp"
#include "semsplat/semantics.hpp"

namespace semsplat::io {

inline constexpr char kEmbeddingMagic[8] = {'S', 'E', 'M', 'E', 'M', 'B', '1', '\0'};
inline constexpr char kQueryMagic[8] = {'S', 'E', 'M', 'Q', 'R', 'Y', '1', '\0'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kQueryVersion = 1;

/// Embedding file contents: the table plus the entry label of each row.
struct EmbeddingFile {
  std::vector<std::string> entry_labels;
  EmbeddingTable table;
};

std::vector<std::uint8_t> encode_embeddings(const std::vector<std::string>& entry_labels,
                                            const EmbeddingTable& table);
/// Parses and checks header, lengths and unit norms; `file` names errors.
EmbeddingFile decode_embeddings(std::span<const std::uint8_t> bytes, const std::string& file);
void save_embeddings(const std::string& path, const std::vector<std::string>& entry_labels,
                     const EmbeddingTable& table);
EmbeddingFile load_embeddings(const std::string& path);

std::vector<std::uint8_t> encode_query_lookup(const QueryLookup& lookup);
QueryLookup decode_query_lookup(std::span<const std::uint8_t> bytes, const std::string& file);
void save_query_lookup(const std::string& path, const QueryLookup& lookup);
QueryLookup load_query_lookup(const std::string& path);

}  // namespace semsplat::io
