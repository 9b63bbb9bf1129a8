#include "dwfs/optics.hpp"

#include <cmath>

#include "dwfs/errors.hpp"
#include "dwfs/fft.hpp"

namespace dwfs {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;
// Residual of the double rounding: 2*pi == kTwoPi + kTwoPiLo to ~107 bits.
constexpr double kTwoPiLo = 2.4492935982947064e-16;
} // namespace

double wrap_to_pi(double x) {
    // k = round(x / 2pi) with halves rounded down, so +pi and -pi both land
    // on +pi.
    const double q = x / kTwoPi;
    const double k = std::ceil(q - 0.5);
    double w = std::fma(-k, kTwoPi, x);
    // The two-term reduction only matters once k*kTwoPiLo approaches ulp(pi);
    // below that it can flip exact boundary cases, so skip it there.
    if (std::abs(x) > 16.0) w = std::fma(-k, kTwoPiLo, w);
    if (w > kPi)
        w -= kTwoPi;
    else if (w <= -kPi)
        w += kTwoPi;
    return w;
}

PhaseGrid wrap_phase(const PhaseGrid& p) {
    validate(p);
    PhaseGrid out = p;
    for (auto& v : out.values) v = wrap_to_pi(v);
    return out;
}

ComplexField pupil_field(const PhaseGrid& pw) {
    validate(pw);
    if (pw.mask_count() == 0) throw validation_error("empty aperture mask");
    ComplexField phasor(pw.n);
    phasor.pitch = pw.pitch;
    for (std::size_t i = 0; i < pw.values.size(); ++i)
        phasor.values[i] = pw.mask[i]
                               ? std::complex<double>(std::cos(pw.values[i]), std::sin(pw.values[i]))
                               : std::complex<double>(0.0, 0.0);
    return idft2_centered(phasor);
}

std::vector<double> intensity(const ComplexField& f) {
    std::vector<double> out(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) out[i] = std::norm(f.values[i]);
    return out;
}

} // namespace dwfs
