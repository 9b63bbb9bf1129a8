#include "dwfs/sim.hpp"

#include <cmath>
#include <random>

#include "dwfs/errors.hpp"
#include "dwfs/fft.hpp"
#include "dwfs/optics.hpp"

namespace dwfs {

namespace {

// splitmix-style stream separation so frame noise never reuses the screen draw
std::uint64_t derive_noise_seed(std::uint64_t seed) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

PhaseGrid kolmogorov_screen(const ScreenSpec& spec) {
    const int n = spec.n;
    if (n < 4 || n % 2 != 0) throw validation_error("screen size must be even and >= 4");
    if (!(spec.r0_px > 0.0)) throw validation_error("r0_px must be positive");

    double outer = spec.outer_scale_px;
    if (outer == 0.0) outer = double(n);
    const bool pure_kolmogorov = !std::isfinite(outer);
    const double inv_l0_sq = pure_kolmogorov ? 0.0 : 1.0 / (outer * outer);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // synthesize on a 4x larger grid and crop: a straight n-point synthesis is
    // n-periodic and misses every mode below 1/n, which visibly bends the
    // structure function away from the 5/3 law already at modest separations
    const int ns = 4 * n;
    const double amp0 = std::sqrt(0.023) * std::pow(spec.r0_px, -5.0 / 6.0);
    ComplexField spectrum(ns);
    for (int i = 0; i < ns; ++i) {
        const double f2 = double(i - ns / 2) / ns; // cycles per pixel
        for (int j = 0; j < ns; ++j) {
            const double f1 = double(j - ns / 2) / ns;
            const double re = gauss(rng), im = gauss(rng);
            const double p = f1 * f1 + f2 * f2 + inv_l0_sq;
            double amp = p > 0.0 ? amp0 * std::pow(p, -11.0 / 12.0) : 0.0;
            spectrum.at(i, j) = std::complex<double>(re, im) * (amp / std::sqrt(2.0));
        }
    }
    ComplexField field = idft2_centered(spectrum);

    PhaseGrid out(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = field.at(i, j).real();
            out.at(i, j) = v;
            mean += v;
        }
    mean /= double(out.values.size());
    for (auto& v : out.values) v -= mean;
    return out;
}

PhaseGrid apply_noise(const PhaseGrid& pw, double level, std::uint64_t seed) {
    validate(pw);
    if (level < 0.0) throw validation_error("noise level must be >= 0");
    if (level == 0.0) return pw;

    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pw.values.size(); ++i)
        if (pw.mask[i]) {
            sq += pw.values[i] * pw.values[i];
            ++count;
        }
    if (count == 0) throw validation_error("empty aperture mask");
    const double scale = level * std::sqrt(sq / double(count));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    PhaseGrid out = pw;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double u = uni(rng); // one draw per pixel keeps streams mask-independent
        if (out.mask[i]) out.values[i] += u * scale;
    }
    return out;
}

ProtocolFrame make_protocol_frame(const ScreenSpec& spec, const ApertureSpec& aperture,
                                  double noise_level) {
    ProtocolFrame frame;
    frame.truth = kolmogorov_screen(spec);
    frame.truth.mask = make_aperture_mask(spec.n, aperture);
    frame.truth.zero_outside_mask();
    frame.wrapped = wrap_phase(frame.truth);
    frame.noisy = apply_noise(frame.wrapped, noise_level, derive_noise_seed(spec.seed));
    return frame;
}

} // namespace dwfs
