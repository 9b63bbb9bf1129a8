#pragma once

#include <vector>

#include "dwfs/grid.hpp"

namespace dwfs {

// Itoh's method independently per column (down the rows): integrate wrapped
// first differences. Kept deliberately naive; it is the failure-mode
// baseline.
PhaseGrid unwrap_columnwise(const PhaseGrid& pw);

// Second-difference reliability per pixel (higher = more reliable), the
// guidance function for the merge-order unwrapper below. Border pixels get
// the minimum reliability of their computable neighbors.
std::vector<double> reliability_map(const PhaseGrid& pw);

// Merge-order unwrapping following reliability (Herraez et al. 2002): sort
// pixel-adjacency edges by summed endpoint reliability, merge groups
// union-find style, shifting the absorbed group by the 2*pi multiple that
// best matches across the edge. Output is congruent to the input mod 2*pi.
PhaseGrid unwrap_mrp(const PhaseGrid& pw);

// Unweighted least-squares unwrapping: discrete Poisson equation with
// Neumann boundaries driven by wrapped first differences, solved by DCT.
// Output is piston-free over the mask.
PhaseGrid unwrap_pe(const PhaseGrid& pw);

} // namespace dwfs
