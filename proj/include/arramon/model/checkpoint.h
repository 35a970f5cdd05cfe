#pragma once

#include <filesystem>

#include <json.hpp>

#include "arramon/model/network.h"

namespace arramon {

/// JSON tensor archive:
/// {"format": "arramon-checkpoint", "version": 1, "config": {...},
///  "vocab": [words], "tensors": [{"name", "shape": [rows, cols], "data": [row-major]}]}
nlohmann::json checkpoint_json(const Network& net);
/// Throws SchemaError on a malformed archive or a shape mismatch.
Network network_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

} // namespace arramon
