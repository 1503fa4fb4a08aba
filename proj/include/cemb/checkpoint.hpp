#pragma once

#include <cstdint>
#include <string>

#include "cemb/training.hpp"

namespace cemb {

// Versioned binary container: magic "CEMB", u32 format version, vocab,
// encoder config, train config, step counter, then named parameter blocks
// with shapes and little-endian f64 data. Round-trips are bit-exact.
struct Checkpoint {
  uint32_t format_version = kCheckpointFormatVersion;
  Model model;
  TrainConfig train_config;
  int step = 0;

  static constexpr uint32_t kCheckpointFormatVersion = 1;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cemb
