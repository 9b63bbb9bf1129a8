#pragma once

#include <cstdint>
#include <vector>

#include "dwfs/grid.hpp"
#include "dwfs/report.hpp"

namespace dwfs {

// Partition of an N px grid into n_sub x n_sub subapertures of sub_px pixels.
// A subaperture is active when at least half of its pixels are inside the
// aperture (exact half counts as active).
struct SubapertureLayout {
    int n = 0;
    int n_sub = 0;
    int sub_px = 0;
    std::vector<std::uint8_t> active;     // n_sub * n_sub
    std::vector<std::uint8_t> pixel_mask; // copy of the source aperture

    bool is_active(int j, int k) const { return active[std::size_t(j) * n_sub + k] != 0; }
};

SubapertureLayout make_layout(const PhaseGrid& pw, int n_sub);

// Per-subaperture spot displacements in focal-plane pixels, bounded by
// sub_px/2 in magnitude. valid = active and carrying light.
struct SlopeField {
    SubapertureLayout layout;
    std::vector<double> sx, sy;       // n_sub * n_sub
    std::vector<std::uint8_t> valid;
};

// Focal-plane field of one subaperture: the (j,k) block of mask * exp(+i*pw),
// transformed on the sub_px grid.
ComplexField subaperture_field(const PhaseGrid& pw, int j, int k,
                               const SubapertureLayout& layout);

// Spot positions relative to each subaperture's flat-phase reference spot,
// measured as the cyclic center of mass of the oversampled subimage
// intensity (computed in the pupil domain via the correlation theorem).
// Sign convention: a positive slope means the local phase increases along
// the axis (spot walks the other way).
SlopeField centroid_slopes(const PhaseGrid& pw, const SubapertureLayout& layout);

// Least-squares integration of the slope field (grad phi ~ 2*pi/sub_px *
// slope), bilinear upsample to the pixel grid, masked, zero mean over the
// aperture.
PhaseGrid integrate_slopes(const SlopeField& slopes, UnwrapReport* report = nullptr);

// Full pipeline: slopes from the wrapped phase, then integration.
UnwrapReport unwrap_sh(const PhaseGrid& pw, int n_sub);

} // namespace dwfs
