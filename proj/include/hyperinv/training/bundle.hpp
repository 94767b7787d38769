#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hyperinv/numerics/checkpoint.hpp"
#include "hyperinv/training/pretrain.hpp"

namespace hyperinv::training {

/// Tensors: hypernetwork parameters, batchnorm parameters and running
/// statistics, one weight per head. Metadata carries the architecture,
/// activation, task names and descriptors so the checkpoint is self-describing.
Checkpoint to_checkpoint(const PretrainedBundle& bundle);
PretrainedBundle bundle_from_checkpoint(const Checkpoint& checkpoint);

Checkpoint to_checkpoint(const MtlBundle& bundle);
MtlBundle mtl_bundle_from_checkpoint(const Checkpoint& checkpoint);

/// `<stem>.json`, `<stem>.bin` and `<stem>_log.csv` under `dir`.
void save_bundle(const std::filesystem::path& dir, const std::string& stem, const PretrainedBundle& bundle);
PretrainedBundle load_bundle(const std::filesystem::path& dir, const std::string& stem);
void save_bundle(const std::filesystem::path& dir, const std::string& stem, const MtlBundle& bundle);
MtlBundle load_mtl_bundle(const std::filesystem::path& dir, const std::string& stem);

std::uint64_t bundle_digest(const PretrainedBundle& bundle);
std::uint64_t bundle_digest(const MtlBundle& bundle);

}  // namespace hyperinv::training
