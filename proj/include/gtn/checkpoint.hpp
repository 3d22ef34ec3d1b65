#pragma once

#include <string>

#include "gtn/training.hpp"

namespace gtn {

// Binary layout, little-endian:
//   "GTNCKPT1"
//   u64 n, u64 m, u64 d, u64 seed, i64 epoch, i64 adam_step
//   u32 backend, u32 combine, u32 num_layers, u32 reserved, f64 lambda
//   f64[(n+m) d] E_in, f64[(n+m) d] first moments, f64[(n+m) d] second moments
//   u64 FNV-1a of every preceding byte
inline constexpr char kCheckpointMagic[] = "GTNCKPT1";

void save_checkpoint(const ModelState& state, const std::string& path);

// Throws CheckpointError on a missing file, wrong magic, truncation or
// checksum mismatch.
ModelState load_checkpoint(const std::string& path);

// Throws ShapeError unless the state matches the given sizes.
void check_checkpoint_shape(const ModelState& state, Index num_users, Index num_items,
                            Index embed_dim);

}  // namespace gtn
