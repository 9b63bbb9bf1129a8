#pragma once

#include <cstdint>

#include "dwfs/defaults.hpp"
#include "dwfs/grid.hpp"

namespace dwfs {

struct ScreenSpec {
    int n = 0;
    double r0_px = defaults::kR0Px; // Fried-parameter analog in pixels
    std::uint64_t seed = 0;
    double outer_scale_px = 0.0;    // 0 means default L0 = n
};

// Von Karman turbulence screen by spectral synthesis: complex Gaussian white
// noise shaped by the square root of the (|xi|^2 + L0^-2)^(-11/6) spectrum,
// inverse transformed, real part kept, mean removed. Deterministic per seed;
// full mask.
PhaseGrid kolmogorov_screen(const ScreenSpec& spec);

// Adds u * level * rms(pw) per in-mask pixel, u uniform on [-1, 1],
// independent per pixel, deterministic per seed. rms is taken over the mask.
// The result is *not* re-wrapped.
PhaseGrid apply_noise(const PhaseGrid& pw, double level, std::uint64_t seed);

// One instance of the standard experiment: masked screen, its wrap, and the
// noisy wrap. The noise stream is derived from spec.seed so a frame is fully
// determined by (spec, aperture, noise_level).
struct ProtocolFrame {
    PhaseGrid truth;
    PhaseGrid wrapped;
    PhaseGrid noisy;
};

ProtocolFrame make_protocol_frame(const ScreenSpec& spec, const ApertureSpec& aperture,
                                  double noise_level = defaults::kNoiseLevel);

} // namespace dwfs
