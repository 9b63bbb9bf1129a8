#pragma once

#include <cstdint>

// Single source of truth for every tunable default. The CLI reads these
// constants; a round-trip test asserts the binary reports the same values.
namespace dwfs::defaults {

// Experiment protocol
inline constexpr int kProtocolN = 128;         // frame size of the standard runs
inline constexpr int kProtocolSeeds = 10;      // seeds per comparison
inline constexpr double kNoiseLevel = 0.2;
inline constexpr double kR0Px = 3.0;           // Fried-parameter analog, pixels
inline constexpr double kOuterScaleFactor = 1.0; // outer scale L0 = factor * n
inline constexpr int kApertureDivisor = 4;     // disc diameter = n / divisor

// Shack-Hartmann
inline constexpr int kNSub = 16;
inline constexpr double kActiveCoverage = 0.5; // >= 50% in-mask pixels, ties active
inline constexpr int kSubimageZoom = 8;        // slope-readout oversampling

// Fourier-type sensors
inline constexpr double kApexC = 1.0;          // rad per frequency pixel
inline constexpr double kModRadius = 0.0;
inline constexpr int kModSteps = 16;

// Nonlinear (preconditioned gradient-descent) reconstructor
inline constexpr double kNopeS = 11.0 / 6.0;
inline constexpr int kNopeMaxIters = 500;
inline constexpr double kNopeGradTol = 1e-10;
inline constexpr double kArmijoC = 1e-4;
inline constexpr int kMaxHalvings = 30;
inline constexpr double kInitialStep = 1.0;

// Least-squares slope integration
inline constexpr double kCgTol = 1e-10;
inline constexpr int kCgMaxIters = 20000;

// Linear pyramid reconstruction
inline constexpr double kCalibTiltPeak = 0.1;  // rad, calibration probe amplitude
inline constexpr double kPupilRegionThreshold = 0.05; // of quadrant max, centroid support

} // namespace dwfs::defaults
