#pragma once

#include <filesystem>
#include <string>

#include "acsum/config.hpp"
#include "acsum/model.hpp"
#include "acsum/training.hpp"

namespace acsum {

/// Everything needed to continue a run: configuration, vocabularies, model
/// tensors, optimizer accumulators and the progress cursor. Random streams
/// are derived from the seed and the cursor counters, so those counters are
/// the complete random state.
struct Checkpoint {
  RunConfig config;
  Vocabularies vocab;
  ModelParams params;
  TrainingState state;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: "ACSM", u32 version, then length-prefixed sections. All
/// integers and doubles are little-endian; every tensor and accumulator
/// carries an FNV-1a checksum of its payload.
std::string serialize_checkpoint(Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace acsum
