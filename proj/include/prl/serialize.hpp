#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "prl/tensor.hpp"

namespace prl {

// PRLT record: magic "PRLT", u32 rank, u32 extents[rank], then 32-bit
// little-endian floats row-major.
void write_prlt(std::ostream& out, const Tensor& t);
Tensor read_prlt(std::istream& in);

void write_prlt_file(const std::string& path, const Tensor& t);
Tensor read_prlt_file(const std::string& path);

// Checkpoint: concatenated PRLT records at `path` plus a "<path>.manifest"
// text sidecar with one "name shape_dims byte_offset" line per tensor.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

}  // namespace prl
