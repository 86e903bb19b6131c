#pragma once

#include "graft/dataset.hpp"
#include "graft/gnn.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace graft {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary model checkpoint; layout documented in docs/checkpoint-format.md.
/// `provenance` is an opaque string (the CLI stores its config hash there).
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path, const std::string& provenance = {});

struct LoadedCheckpoint {
  TrainedModel model;
  std::string provenance;
};

/// Rebuilds graph operators from `dataset`, which must match the checkpoint's
/// feature dimension and class count.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace graft
