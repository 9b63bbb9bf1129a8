#pragma once

#include <string>
#include <vector>

#include "dwfs/defaults.hpp"
#include "dwfs/grid.hpp"
#include "dwfs/report.hpp"

namespace dwfs {

// Phase masks applied in the focal plane. c is the apex steepness in radians
// per frequency pixel; iquad ignores it.
enum class ShapeKind { pyramid4, roof_x, roof_y, pyramid3, cone, iquad };

const char* to_string(ShapeKind k);
ShapeKind shape_kind_from_string(const std::string& s); // throws validation_error

struct ShapeFunction {
    ShapeKind kind = ShapeKind::pyramid4;
    double c = defaults::kApexC;
};

// Samples the shape on centered frequency coordinates xi in [-n/2, n/2).
// pyramid4 is evaluated as roof_x + roof_y term by term, so the decomposition
// holds bit for bit.
std::vector<double> eval_shape(const ShapeFunction& sf, int n);

// Focal-plane filtered intensity |idft2(exp(i*psi) . dft2(mask*exp(-i*pw)))|^2.
// The filter is phase-only, so sum(I) == #mask pixels (mean #mask/n^2).
std::vector<double> sensor_intensity(const PhaseGrid& pw, const ShapeFunction& sf);

// Circular tip/tilt modulation: mean intensity over `steps` equally spaced
// positions on a circle of the given radius (waves across the aperture).
// radius 0 reproduces sensor_intensity exactly.
struct ModulationSpec {
    double radius = defaults::kModRadius;
    int steps = defaults::kModSteps;
};

std::vector<double> modulated_intensity(const PhaseGrid& pw, const ShapeFunction& sf,
                                        const ModulationSpec& mod);

// Quad-cell style linear reconstruction from a four-pupil-image frame
// (pyramid4 sensor). Registers the four pupil images on a flat-phase
// calibration frame, forms the normalized difference signals, scales them by
// a probe-tilt calibration, and integrates at pixel resolution. When the
// measurement was modulated, pass the same spec: calibration frames are then
// modulated identically, and the separation check allows for the wider
// footprint. Throws validation_error when the four pupil images cannot be
// separated (c too small for the pupil size, or modulation throw too large).
PhaseGrid linear_reconstruct_p4(const std::vector<double>& I,
                                const std::vector<std::uint8_t>& mask, int n,
                                double c, const ModulationSpec& mod = {},
                                UnwrapReport* report = nullptr);

enum class NopeStart { zero, linear };

struct NopeOptions {
    double s = defaults::kNopeS;     // preconditioner exponent
    NopeStart start = NopeStart::zero;
    int max_iters = defaults::kNopeMaxIters;
    double grad_tol = defaults::kNopeGradTol;
    ModulationSpec modulation{};     // forward model includes it when radius > 0
};

// Minimizes J(phi) = 0.5 * || F(phi) - I ||^2 where F is the sensor forward
// model, by gradient descent preconditioned with (1 + |xi|^2)^(-s) in
// frequency space and an Armijo backtracking line search. Non-convergence is
// reported, never thrown: the best iterate comes back with report->warning.
PhaseGrid nonlinear_reconstruct(const std::vector<double>& I,
                                const std::vector<std::uint8_t>& mask, int n,
                                const ShapeFunction& sf, const NopeOptions& opts,
                                UnwrapReport* report = nullptr);

// Data-misfit objective of nonlinear_reconstruct at a given phase, with the
// adjoint gradient on request. Exposed for diagnostics and derivative checks.
double nope_objective(const std::vector<double>& phi,
                      const std::vector<double>& I,
                      const std::vector<std::uint8_t>& mask, int n,
                      const ShapeFunction& sf, const ModulationSpec& mod = {},
                      std::vector<double>* grad = nullptr);

enum class ReconMode { linear, nonlinear };

// Measurement plus reconstruction in one step: simulates the sensor on the
// wrapped input (modulated when opts.modulation.radius > 0), then dispatches.
// linear mode and NopeStart::linear require pyramid4.
UnwrapReport unwrap_fourier(const PhaseGrid& pw, const ShapeFunction& sf,
                            ReconMode mode, const NopeOptions& opts = {});

// Averaged roof reconstruction: mean of the roof_x and roof_y nonlinear
// reconstructions, piston-aligned over the aperture.
UnwrapReport unwrap_fourier_roof(const PhaseGrid& pw, double c,
                                 const NopeOptions& opts = {});

} // namespace dwfs
