#include "semsplat/io/embeddings.hpp"

#include <cmath>
#include <cstring>

#include "io/binary.hpp"

namespace semsplat::io {

namespace {

void check_magic(detail::ByteReader& r, const char (&magic)[8], const char* what) {
  if (r.remaining() < 8 || std::memcmp(r.bytes(8, what).data(), magic, 8) != 0) {
    r.fail(ErrorCode::kBadMagic, std::string("not a ") + what + " file", 0);
  }
}

void check_rows(detail::ByteReader& r, std::uint64_t rows, std::uint32_t dim, const char* what) {
  const std::uint64_t need = rows * dim * 4;
  if (dim != 0 && need / dim / 4 != rows) r.fail(ErrorCode::kLengthMismatch, "row count overflows");
  if (need > r.remaining()) {
    r.fail(ErrorCode::kTruncated, std::string(what) + ": " + std::to_string(rows) + " rows of " +
                                      std::to_string(dim) + " floats exceed the remaining " +
                                      std::to_string(r.remaining()) + " bytes");
  }
}

void check_unit_rows(detail::ByteReader& r, const std::vector<float>& rows, std::uint32_t dim,
                     std::size_t base_offset, const char* what) {
  for (std::size_t i = 0; dim && i < rows.size() / dim; ++i) {
    double s = 0.0;
    for (std::uint32_t k = 0; k < dim; ++k) s += static_cast<double>(rows[i * dim + k]) * rows[i * dim + k];
    if (!std::isfinite(s) || std::abs(std::sqrt(s) - 1.0) > 1e-5) {
      r.fail(ErrorCode::kNotUnitNorm,
             std::string(what) + " row " + std::to_string(i) + " has norm " + std::to_string(std::sqrt(s)),
             base_offset + i * dim * 4);
    }
  }
}

}  // namespace

std::vector<std::uint8_t> encode_embeddings(const std::vector<std::string>& entry_labels,
                                            const EmbeddingTable& table) {
  if (entry_labels.size() != table.entry_count()) {
    throw_invalid("embedding labels and rows disagree in count");
  }
  detail::ByteWriter w;
  w.bytes(kEmbeddingMagic, 8);
  w.u32(kEmbeddingVersion);
  w.u32(static_cast<std::uint32_t>(table.dim));
  w.u32(static_cast<std::uint32_t>(entry_labels.size()));
  w.u32(static_cast<std::uint32_t>(table.negative_count()));
  for (const auto& s : entry_labels) w.string(s);
  for (const auto& s : table.negative_phrases) w.string(s);
  w.f32s(table.entry_vectors);
  w.f32s(table.negative_vectors);
  return std::move(w.buffer());
}

EmbeddingFile decode_embeddings(std::span<const std::uint8_t> bytes, const std::string& file) {
  detail::ByteReader r(bytes, file);
  check_magic(r, kEmbeddingMagic, "embedding");
  const std::uint32_t version = r.u32("version");
  if (version != kEmbeddingVersion) {
    r.fail(ErrorCode::kUnsupportedVersion, "embedding version " + std::to_string(version), 8);
  }
  const std::uint32_t dim = r.u32("dim");
  const std::uint32_t n = r.u32("entry count");
  const std::uint32_t m = r.u32("negative count");
  if (dim == 0) r.fail(ErrorCode::kDimensionMismatch, "dimension is zero", 12);
  if (m == 0) r.fail(ErrorCode::kLengthMismatch, "at least one negative phrase is required", 20);

  EmbeddingFile out;
  out.table.dim = static_cast<int>(dim);
  for (std::uint32_t i = 0; i < n; ++i) out.entry_labels.push_back(r.string("entry label"));
  for (std::uint32_t i = 0; i < m; ++i) out.table.negative_phrases.push_back(r.string("negative phrase"));

  const std::uint64_t expected = (static_cast<std::uint64_t>(n) + m) * dim * 4;
  if (r.remaining() != expected) {
    r.fail(ErrorCode::kDimensionMismatch,
           "vector block holds " + std::to_string(r.remaining()) + " bytes but " +
               std::to_string(n) + " + " + std::to_string(m) + " rows of dimension " +
               std::to_string(dim) + " need " + std::to_string(expected));
  }
  check_rows(r, n, dim, "entry rows");
  const std::size_t entry_off = r.offset();
  out.table.entry_vectors.resize(static_cast<std::size_t>(n) * dim);
  r.f32s(out.table.entry_vectors, "entry rows");
  const std::size_t neg_off = r.offset();
  out.table.negative_vectors.resize(static_cast<std::size_t>(m) * dim);
  r.f32s(out.table.negative_vectors, "negative rows");
  check_unit_rows(r, out.table.entry_vectors, dim, entry_off, "entry");
  check_unit_rows(r, out.table.negative_vectors, dim, neg_off, "negative");
  return out;
}

void save_embeddings(const std::string& path, const std::vector<std::string>& entry_labels,
                     const EmbeddingTable& table) {
  detail::write_file_atomic(path, encode_embeddings(entry_labels, table));
}

EmbeddingFile load_embeddings(const std::string& path) {
  return decode_embeddings(detail::read_file_bytes(path), path);
}

std::vector<std::uint8_t> encode_query_lookup(const QueryLookup& lookup) {
  detail::ByteWriter w;
  w.bytes(kQueryMagic, 8);
  w.u32(kQueryVersion);
  w.u32(static_cast<std::uint32_t>(lookup.dim));
  w.u32(static_cast<std::uint32_t>(lookup.vectors.size()));
  for (const auto& [text, v] : lookup.vectors) {
    if (static_cast<int>(v.size()) != lookup.dim) throw_invalid("query '" + text + "' has wrong dimension");
    w.string(text);
    w.f32s(v);
  }
  return std::move(w.buffer());
}

QueryLookup decode_query_lookup(std::span<const std::uint8_t> bytes, const std::string& file) {
  detail::ByteReader r(bytes, file);
  check_magic(r, kQueryMagic, "query lookup");
  const std::uint32_t version = r.u32("version");
  if (version != kQueryVersion) {
    r.fail(ErrorCode::kUnsupportedVersion, "query lookup version " + std::to_string(version), 8);
  }
  QueryLookup out;
  const std::uint32_t dim = r.u32("dim");
  const std::uint32_t count = r.u32("record count");
  if (dim == 0) r.fail(ErrorCode::kDimensionMismatch, "dimension is zero", 12);
  out.dim = static_cast<int>(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    std::string text = r.string("prompt");
    check_rows(r, 1, dim, "prompt vector");
    std::vector<float> v(dim);
    r.f32s(v, "prompt vector");
    if (!out.vectors.emplace(std::move(text), std::move(v)).second) {
      r.fail(ErrorCode::kDuplicateLabel, "prompt repeats", at);
    }
  }
  if (r.remaining() != 0) {
    r.fail(ErrorCode::kLengthMismatch, std::to_string(r.remaining()) + " trailing bytes");
  }
  return out;
}

void save_query_lookup(const std::string& path, const QueryLookup& lookup) {
  detail::write_file_atomic(path, encode_query_lookup(lookup));
}

QueryLookup load_query_lookup(const std::string& path) {
  return decode_query_lookup(detail::read_file_bytes(path), path);
}

}  // namespace semsplat::io
