#pragma once

#include <string>

#include "semsplat/dataset.hpp"

namespace semsplat::io {

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

/// Loads and validates a dataset. `path` is the manifest or its directory.
/// Every failure is a FormatError naming the file and the key, frame or
/// byte offset at fault.
Dataset load_dataset(const std::string& path);

/// Writes manifest.json, dictionary.json, embeddings.bin, images/,
/// labels/ and (when present) points.txt under `dir`.
void save_dataset(const Dataset& dataset, const std::string& dir);

SemanticDictionary load_dictionary(const std::string& path);
void save_dictionary(const SemanticDictionary& dict, const std::string& path);

}  // namespace semsplat::io
