#pragma once

#include <cstdint>
#include <string>

#include "advest/ppo.hpp"

namespace advest {

/// Versioned binary trainer snapshot. Layout: 8 magic bytes "ADVEST01",
/// format version, the trainer config hash, then the full trainer state.
/// A resumed run reproduces the uninterrupted one bit-exactly.
inline constexpr char kCheckpointMagic[8] = {'A', 'D', 'V', 'E',
                                             'S', 'T', '0', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Trainer& trainer,
                     std::uint64_t config_hash);

/// Loads into a trainer constructed from the same configuration; refuses
/// mismatched magic, version, or config hash.
void load_checkpoint(const std::string& path, Trainer& trainer,
                     std::uint64_t expected_config_hash);

}  // namespace advest
