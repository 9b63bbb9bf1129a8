#include "dwfs/grid.hpp"

#include <cmath>
#include <string>

#include "dwfs/errors.hpp"

namespace dwfs {

PhaseGrid::PhaseGrid(int n_, double fill)
    : n(n_),
      values(std::size_t(n_) * n_, fill),
      mask(std::size_t(n_) * n_, 1) {}

ComplexField::ComplexField(int n_)
    : n(n_), values(std::size_t(n_) * n_) {}

std::size_t PhaseGrid::mask_count() const {
    std::size_t c = 0;
    for (auto m : mask) c += m != 0;
    return c;
}

double PhaseGrid::mask_mean() const {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask[i]) {
            s += values[i];
            ++c;
        }
    }
    return c ? s / double(c) : 0.0;
}

void PhaseGrid::zero_outside_mask() {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!mask[i]) values[i] = 0.0;
}

void PhaseGrid::remove_piston() {
    const double m = mask_mean();
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = mask[i] ? values[i] - m : 0.0;
}

double ComplexField::total_power() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s;
}

std::vector<std::uint8_t> make_aperture_mask(int n, const ApertureSpec& spec) {
    if (n < 4 || n % 2 != 0)
        throw validation_error("grid size must be even and >= 4, got " + std::to_string(n));
    std::vector<std::uint8_t> mask(std::size_t(n) * n, 0);
    if (spec.kind == ApertureKind::full) {
        std::fill(mask.begin(), mask.end(), std::uint8_t(1));
        return mask;
    }
    const int d = spec.diameter_px;
    if (d < 1 || d > n)
        throw validation_error("aperture diameter must be in [1, n], got " + std::to_string(d));
    const double c = (n - 1) / 2.0;
    const double r = d / 2.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double dy = i - c, dx = j - c;
            const bool in = spec.kind == ApertureKind::disc
                                ? dx * dx + dy * dy <= r * r
                                : std::abs(dx) <= r && std::abs(dy) <= r;
            mask[std::size_t(i) * n + j] = in ? 1 : 0;
        }
    }
    return mask;
}

void validate(const PhaseGrid& g) {
    if (g.n < 4 || g.n % 2 != 0)
        throw validation_error("grid size must be even and >= 4, got " + std::to_string(g.n));
    const std::size_t want = std::size_t(g.n) * g.n;
    if (g.values.size() != want || g.mask.size() != want)
        throw validation_error("grid buffers do not match n*n");
    for (double v : g.values)
        if (!std::isfinite(v)) throw validation_error("grid contains non-finite values");
}

void validate(const ComplexField& f) {
    if (f.n < 4 || f.n % 2 != 0)
        throw validation_error("field size must be even and >= 4, got " + std::to_string(f.n));
    if (f.values.size() != std::size_t(f.n) * f.n)
        throw validation_error("field buffer does not match n*n");
    for (const auto& v : f.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw validation_error("field contains non-finite values");
}

} // namespace dwfs
