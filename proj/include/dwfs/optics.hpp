#pragma once

#include <vector>

#include "dwfs/grid.hpp"

namespace dwfs {

// Wraps x into (-pi, pi]. Halfway points round toward minus infinity so that
// both +pi and -pi map to +pi (wrapToPi convention). Exact idempotence:
// wrap_to_pi(wrap_to_pi(x)) == wrap_to_pi(x) bit for bit.
double wrap_to_pi(double x);

// Pixel-wise wrap of a grid. Mask and pitch carry over.
PhaseGrid wrap_phase(const PhaseGrid& p);

// Focal-plane field of a masked phasor: idft2_centered(mask * exp(+i*pw)).
// Unitary transform, so sum(|E|^2) == #mask pixels (mean power #mask/n^2).
ComplexField pupil_field(const PhaseGrid& pw);

// |E|^2 per pixel.
std::vector<double> intensity(const ComplexField& f);

} // namespace dwfs
