#pragma once

#include "dmidas/model.hpp"
#include "dmidas/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace dmidas {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/**
 * Binary checkpoint layout:
 *   "DMIDASCK"                      8 bytes
 *   format version                  u32 little endian
 *   header length                   u64 little endian
 *   JSON header                     model config, normalizer, seed, tensor index
 *   tensors                         IEEE binary64 little endian, row-major, index order
 */
void save_checkpoint(const TrainedMember& member, const std::filesystem::path& path);

/// DataError on a missing, truncated or malformed file; the history is not stored.
[[nodiscard]] TrainedMember load_checkpoint(const std::filesystem::path& path);

/// JSON form of a model config (used by checkpoints and resolved run configs).
[[nodiscard]] std::string model_config_to_json(const ModelConfig& config);
[[nodiscard]] ModelConfig model_config_from_json(const std::string& text);

}  // namespace dmidas
