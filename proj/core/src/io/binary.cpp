#include "io/binary.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

namespace semsplat::detail {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    const ErrorCode code =
        std::filesystem::exists(path) ? ErrorCode::kIo : ErrorCode::kMissingFile;
    throw FormatError(code, path, "file", "cannot open for reading");
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::random_device rd;
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(ErrorCode::kIo, tmp.string(), "file", "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw FormatError(ErrorCode::kIo, tmp.string(), "file", "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw FormatError(ErrorCode::kIo, path, "file", "rename failed: " + ec.message());
  }
}

}  // namespace semsplat::detail
