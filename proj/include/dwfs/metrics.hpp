#pragma once

#include "dwfs/grid.hpp"

namespace dwfs {

struct MetricReport {
    double rel_error_pct = 0.0;
    double ssim = 0.0;
    double ms_ssim = 0.0;
    long residues = 0;        // residues of the evaluated reconstruction
    double runtime_ms = 0.0;
    bool ms_ssim_truncated = false; // fewer dyadic scales than canonical
};

// Piston-aligned relative L2 error over in-mask pixels, in percent:
//   100 * ||(a - mean(a)) - (b - mean(b))|| / ||b - mean(b)||.
// Throws validation_error when the aligned truth has zero norm.
double relative_error(const PhaseGrid& rec, const PhaseGrid& truth);

// SSIM (11x11 Gaussian window, sigma 1.5, k1 = 0.01, k2 = 0.03) over the
// in-mask bounding box, after piston alignment. Both frames are mapped
// affinely onto a common dynamic range first, which keeps the measure
// symmetric and independent of the overall phase scale.
double ssim(const PhaseGrid& a, const PhaseGrid& b);

// Multi-scale SSIM over up to 5 dyadic scales with the canonical weights
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333). When the window stops fitting,
// the remaining scales are dropped and the used weights renormalized;
// *truncated reports that. Clamped to [0, 1].
double ms_ssim(const PhaseGrid& a, const PhaseGrid& b, bool* truncated = nullptr);

// Number of 2x2 plaquettes (all four corners in-mask) whose loop sum of
// wrapped differences is nonzero.
long count_residues(const PhaseGrid& pw);

MetricReport evaluate(const PhaseGrid& rec, const PhaseGrid& truth);

} // namespace dwfs
