#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "semsplat/error.hpp"

namespace semsplat::detail {

// Little-endian writer into a growing byte buffer.
class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> v) {
    for (float x : v) f32(x);
  }
  void string(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian reader; failures name the file and offset.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string file)
      : data_(data), file_(std::move(file)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& file() const { return file_; }

  [[noreturn]] void fail(ErrorCode code, const std::string& detail, std::size_t at) const {
    throw FormatError(code, file_, "offset " + std::to_string(at), detail);
  }
  [[noreturn]] void fail(ErrorCode code, const std::string& detail) const { fail(code, detail, pos_); }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      fail(ErrorCode::kTruncated, std::string("truncated while reading ") + what + " (need " +
                                      std::to_string(n) + " bytes, have " +
                                      std::to_string(remaining()) + ")");
    }
  }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename U>
  U uint(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  std::uint32_t u32(const char* what) { return uint<std::uint32_t>(what); }
  std::uint64_t u64(const char* what) { return uint<std::uint64_t>(what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  void f32s(std::span<float> out, const char* what) {
    need(out.size() * 4, what);
    for (float& x : out) x = f32(what);
  }
  std::string string(const char* what) {
    const std::size_t at = pos_;
    const std::uint32_t n = u32(what);
    if (n > remaining()) {
      fail(ErrorCode::kTruncated, std::string(what) + " length " + std::to_string(n) +
                                      " runs past the end of the file", at);
    }
    auto b = bytes(n, what);
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
  }

 private:
  std::span<const std::uint8_t> data_;
  std::string file_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace semsplat::detail
