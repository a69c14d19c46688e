#ifndef LATENTIC_CHECKPOINT_HPP
#define LATENTIC_CHECKPOINT_HPP

#include <filesystem>
#include <string>

#include "json.hpp"
#include "latentic/mlp.hpp"

namespace latentic {

// Container format: "LTCK" magic, little-endian u64 header length, JSON
// header (kind, shapes, module version, seed, schedule constants), then all
// tensors as little-endian 32-bit floats in header order. Round-trips
// bit-exactly.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const ParamRefs& tensors);

// Returns the header; tensor data is loaded into `tensors`, which must match
// the stored names and shapes exactly.
nlohmann::json load_checkpoint(const std::filesystem::path& path, const ParamRefs& tensors);

// Reads only the header (for dispatching on "kind" before building a model).
nlohmann::json peek_checkpoint(const std::filesystem::path& path);

}  // namespace latentic

#endif
