#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace dwfs {

// Square N x N grid of real phase samples (radians) with an aperture mask.
// N must be even and >= 4: the centered DFT convention and the subaperture
// tiling both rely on it. Convention for masked quantities: pixels outside
// the mask are stored but set to 0 after masking operations.
//
// Storage is row-major, values[i*n + j]. Index i runs along the second
// coordinate axis (xi2, "y"), j along the first (xi1, "x").
struct PhaseGrid {
    int n = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> mask; // 1 inside the aperture
    double pitch = 1.0;             // grid units per pixel; informational

    PhaseGrid() = default;
    explicit PhaseGrid(int n_, double fill = 0.0);

    double& at(int i, int j) { return values[std::size_t(i) * n + j]; }
    double at(int i, int j) const { return values[std::size_t(i) * n + j]; }
    bool inside(int i, int j) const { return mask[std::size_t(i) * n + j] != 0; }

    std::size_t mask_count() const;
    double mask_mean() const;
    void zero_outside_mask();
    // Subtracts the in-mask mean and zeros everything outside the mask.
    void remove_piston();
};

// Complex-valued field on the same grid geometry.
struct ComplexField {
    int n = 0;
    std::vector<std::complex<double>> values;
    double pitch = 1.0;

    ComplexField() = default;
    explicit ComplexField(int n_);

    std::complex<double>& at(int i, int j) { return values[std::size_t(i) * n + j]; }
    std::complex<double> at(int i, int j) const { return values[std::size_t(i) * n + j]; }

    double total_power() const; // sum |E|^2
};

enum class ApertureKind { disc, square, full };

struct ApertureSpec {
    ApertureKind kind = ApertureKind::disc;
    int diameter_px = 0; // ignored for 'full'
};

// Builds the aperture indicator. disc/square are centered on the grid center
// (between pixels for even N) and span exactly diameter_px pixels across.
std::vector<std::uint8_t> make_aperture_mask(int n, const ApertureSpec& spec);

// Throws validation_error unless n is even, >= 4, sizes match and all values
// are finite.
void validate(const PhaseGrid& g);
void validate(const ComplexField& f);

} // namespace dwfs
