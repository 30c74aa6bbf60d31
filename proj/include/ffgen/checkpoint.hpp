#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ffgen/network.hpp"
#include "ffgen/trainer.hpp"
#include "ffgen/trajectory.hpp"

namespace ffgen::trainer {

inline constexpr int kCheckpointMajor = 1;
inline constexpr int kCheckpointMinor = 0;

// Versioned text container; grammar in docs/checkpoint_format.md.
struct Checkpoint {
  trajectory::TrajectorySpec spec;
  FieldNet net;
  std::optional<OptimState> optim;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace ffgen::trainer
