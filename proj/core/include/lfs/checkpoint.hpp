#pragma once

#include "lfs/model.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace lfs {

// Binary layout, all integers and floats little-endian:
//   "LFS1"
//   u32 layer_count
//   layer_count x { u32 rows, u32 cols, rows*cols f64 weights (row-major), rows f64 biases }
//   u32 K, u32 d, f64 scale, K*d f64 class weights (row-major)
// Nothing may follow the head.

std::vector<std::byte> encode_checkpoint(const Network& net);

/// Throws FormatError on bad magic, truncation, trailing bytes or non-composing shapes.
Network decode_checkpoint(std::span<const std::byte> bytes);

void write_checkpoint(const std::filesystem::path& path, const Network& net);
Network read_checkpoint(const std::filesystem::path& path);

} // namespace lfs
