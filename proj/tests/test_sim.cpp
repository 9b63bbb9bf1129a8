#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "dwfs/errors.hpp"
#include "dwfs/grid.hpp"
#include "dwfs/optics.hpp"
#include "dwfs/sim.hpp"
#include "oracles.hpp"

using namespace dwfs;

namespace {

double rms(const PhaseGrid& g) {
    double acc = 0.0;
    for (double v : g.values) acc += v * v;
    return std::sqrt(acc / double(g.values.size()));
}

// isotropic structure function <(phi(x+r) - phi(x))^2> averaged over rows and
// columns at lag r
double structure_fn(const PhaseGrid& g, int r) {
    double acc = 0.0;
    std::size_t cnt = 0;
    const int n = g.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j + r < n; ++j) {
            const double d = g.at(i, j + r) - g.at(i, j);
            acc += d * d;
            ++cnt;
        }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i + r < n; ++i) {
            const double d = g.at(i + r, j) - g.at(i, j);
            acc += d * d;
            ++cnt;
        }
    return acc / double(cnt);
}

} // namespace

TEST_CASE("screens are deterministic per seed and differ across seeds") {
    const ScreenSpec spec{64, 3.0, 77, 0.0};
    const PhaseGrid a = kolmogorov_screen(spec);
    const PhaseGrid b = kolmogorov_screen(spec);
    CHECK(a.values == b.values);
    ScreenSpec other = spec;
    other.seed = 78;
    const PhaseGrid c = kolmogorov_screen(other);
    CHECK(a.values != c.values);
}

TEST_CASE("screens have zero mean") {
    for (unsigned seed = 0; seed < 100; ++seed) {
        const PhaseGrid g = kolmogorov_screen({64, 3.0, seed, 0.0});
        double mean = 0.0;
        for (double v : g.values) mean += v;
        CHECK(std::abs(mean / double(g.values.size())) <= 1e-10);
    }
}

TEST_CASE("structure function follows the five-thirds law") {
    // average D(r) over 100 seeds of the pure-Kolmogorov setting, then fit the
    // log-log slope across one decade of separations
    const int n = 128;
    const std::vector<int> lags = {1, 2, 3, 4, 6, 8, 10};
    std::vector<double> d(lags.size(), 0.0);
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        const PhaseGrid g = kolmogorov_screen(
            {n, 3.0, unsigned(9000 + s), std::numeric_limits<double>::infinity()});
        for (std::size_t k = 0; k < lags.size(); ++k) d[k] += structure_fn(g, lags[k]);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lags.size(); ++k) {
        const double x = std::log(double(lags[k])), y = std::log(d[k] / seeds);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = double(lags.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope == doctest::Approx(5.0 / 3.0).epsilon(0.15 / (5.0 / 3.0)));
}

TEST_CASE("doubling the coherence length scales rms by the five-sixths law") {
    const int n = 128;
    double num = 0.0, den = 0.0;
    for (unsigned seed = 0; seed < 40; ++seed) {
        const PhaseGrid a = kolmogorov_screen({n, 6.0, 30000 + seed, 0.0});
        const PhaseGrid b = kolmogorov_screen({n, 3.0, 30000 + seed, 0.0});
        num += rms(a);
        den += rms(b);
    }
    CHECK(num / den == doctest::Approx(std::pow(2.0, -5.0 / 6.0)).epsilon(0.10));
}

TEST_CASE("outer scale suppresses power at the largest separations") {
    // a short outer scale caps D(r) at large lags relative to pure Kolmogorov
    const int n = 128;
    double capped = 0.0, pure = 0.0;
    for (unsigned seed = 0; seed < 20; ++seed) {
        const PhaseGrid a = kolmogorov_screen({n, 3.0, 500 + seed, 16.0});
        const PhaseGrid b =
            kolmogorov_screen({n, 3.0, 500 + seed, std::numeric_limits<double>::infinity()});
        capped += structure_fn(a, 48);
        pure += structure_fn(b, 48);
    }
    CHECK(capped < pure);
}

TEST_CASE("screen spec validation") {
    CHECK_THROWS_AS(kolmogorov_screen({0, 3.0, 1, 0.0}), validation_error);
    CHECK_THROWS_AS(kolmogorov_screen({15, 3.0, 1, 0.0}), validation_error);
    CHECK_THROWS_AS(kolmogorov_screen({64, 0.0, 1, 0.0}), validation_error);
    CHECK_THROWS_AS(kolmogorov_screen({64, -1.0, 1, 0.0}), validation_error);
}

TEST_CASE("zero noise level is the identity") {
    PhaseGrid g = kolmogorov_screen({32, 3.0, 5, 0.0});
    const PhaseGrid w = wrap_phase(g);
    const PhaseGrid out = apply_noise(w, 0.0, 123);
    CHECK(out.values == w.values);
    CHECK_THROWS_AS(apply_noise(w, -0.1, 123), validation_error);
}

TEST_CASE("noise is deterministic per seed and touches nearly every pixel") {
    PhaseGrid g = kolmogorov_screen({64, 3.0, 6, 0.0});
    g.mask = make_aperture_mask(64, {ApertureKind::disc, 32});
    g.zero_outside_mask();
    const PhaseGrid w = wrap_phase(g);
    const PhaseGrid n1 = apply_noise(w, 0.2, 99);
    const PhaseGrid n2 = apply_noise(w, 0.2, 99);
    CHECK(n1.values == n2.values);
    std::size_t changed = 0, in_mask = 0;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (!w.mask[i]) continue;
        ++in_mask;
        if (n1.values[i] != w.values[i]) ++changed;
    }
    CHECK(double(changed) > 0.99 * double(in_mask));
    // pixels outside the aperture stay untouched
    for (std::size_t i = 0; i < w.values.size(); ++i)
        if (!w.mask[i]) CHECK(n1.values[i] == w.values[i]);
}

TEST_CASE("noise amplitude tracks the uniform-distribution second moment") {
    const int n = 256;
    PhaseGrid g = kolmogorov_screen({n, 3.0, 7, 0.0});
    const PhaseGrid w = wrap_phase(g);
    const PhaseGrid noisy = apply_noise(w, 0.2, 1234);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        const double d = noisy.values[i] - w.values[i];
        num += d * d;
        den += w.values[i] * w.values[i];
    }
    const double ratio = std::sqrt(num / den);
    CHECK(ratio == doctest::Approx(0.2 / std::sqrt(3.0)).epsilon(0.05));
}

TEST_CASE("noise can push the wrapped range beyond pi") {
    PhaseGrid g = kolmogorov_screen({128, 3.0, 8, 0.0});
    const PhaseGrid w = wrap_phase(g);
    const PhaseGrid noisy = apply_noise(w, 0.2, 55);
    double wmax = 0.0, nmax = 0.0;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        wmax = std::max(wmax, std::abs(w.values[i]));
        nmax = std::max(nmax, std::abs(noisy.values[i]));
    }
    CHECK(wmax <= oracle::kPi);
    CHECK(nmax > oracle::kPi);
}

TEST_CASE("protocol frames are reproducible end to end") {
    const ScreenSpec spec{128, 3.0, 42, 0.0};
    const ApertureSpec ap{ApertureKind::disc, 32};
    const ProtocolFrame f1 = make_protocol_frame(spec, ap, 0.2);
    const ProtocolFrame f2 = make_protocol_frame(spec, ap, 0.2);
    CHECK(f1.truth.values == f2.truth.values);
    CHECK(f1.wrapped.values == f2.wrapped.values);
    CHECK(f1.noisy.values == f2.noisy.values);
    CHECK(f1.truth.mask == f1.noisy.mask);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < f1.truth.values.size(); ++i) {
        if (f1.truth.mask[i]) ++inside;
        else CHECK(f1.truth.values[i] == 0.0);
    }
    CHECK(inside > 0);
    // the wrapped frame actually wraps and the noisy frame moves off it
    double wmax = 0.0;
    std::size_t moved = 0;
    for (std::size_t i = 0; i < f1.wrapped.values.size(); ++i) {
        wmax = std::max(wmax, std::abs(f1.wrapped.values[i]));
        if (f1.noisy.values[i] != f1.wrapped.values[i]) ++moved;
    }
    CHECK(wmax <= oracle::kPi);
    CHECK(moved > 0);
}
