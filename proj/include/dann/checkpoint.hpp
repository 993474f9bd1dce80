#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dann/tensor.hpp"

namespace dann {

constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Magic "DANN", version, tensor count, then per tensor: name length,
/// UTF-8 name, rank, dims, raw little-endian doubles. Order preserved,
/// so save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace dann
