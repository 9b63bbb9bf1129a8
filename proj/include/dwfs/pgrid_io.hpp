#pragma once

#include <string>

#include "dwfs/grid.hpp"

namespace dwfs {

// PGRID v1: little-endian binary grid container.
//
//   bytes 0..15   ASCII magic "PGRIDv1\n" padded with NUL to 16 bytes
//   bytes 16..19  u32 N
//   bytes 20..23  u32 flags (bit 0: mask block present)
//   then          N*N float64, row-major
//   then          N*N u8 mask iff flag bit 0
//
// pitch is not stored; loaded grids get pitch 1. Grids without a mask block
// load with a full mask.
void save_pgrid(const std::string& path, const PhaseGrid& g, bool with_mask = true);
PhaseGrid load_pgrid(const std::string& path);

} // namespace dwfs
