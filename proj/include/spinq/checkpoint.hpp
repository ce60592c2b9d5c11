#pragma once

// Binary checkpoint of the infinite-DMRG state after a growth step.
// Layout: magic "SPQCKPT", format version, then little-endian fields.

#include <optional>
#include <string>
#include <vector>

#include "spinq/dmrg.hpp"

namespace spinq {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string model;  // ModelSpec::to_string()
  int iteration = 0;
  int m = 0;
  Block block;
  std::vector<double> energies;
  std::vector<double> truncation_errors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);

/// Empty if the file does not exist. Throws on a corrupt file, a version
/// mismatch or a checkpoint written for a different model.
std::optional<Checkpoint> load_checkpoint(const std::string& path, const ModelSpec& spec);

}  // namespace spinq
