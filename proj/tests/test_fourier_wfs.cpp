#include "doctest.h"

#include <cmath>
#include <random>

#include "dwfs/errors.hpp"
#include "dwfs/fourier_wfs.hpp"
#include "dwfs/grid.hpp"
#include "dwfs/metrics.hpp"
#include "dwfs/optics.hpp"
#include "oracles.hpp"

using namespace dwfs;

namespace {

constexpr double kPi = oracle::kPi;

PhaseGrid protocol_aperture(int n) {
    PhaseGrid g(n);
    g.mask = make_aperture_mask(n, {ApertureKind::disc, n / 4});
    return g;
}

} // namespace

TEST_CASE("shape kinds round trip through their names") {
    for (ShapeKind k : {ShapeKind::pyramid4, ShapeKind::roof_x, ShapeKind::roof_y,
                        ShapeKind::pyramid3, ShapeKind::cone, ShapeKind::iquad})
        CHECK(shape_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(shape_kind_from_string("prism"), validation_error);
}

TEST_CASE("pyramid4 decomposes into the two rooves exactly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> cd(0.05, 5.0);
    for (int t = 0; t < 100; ++t) {
        const double c = cd(rng);
        const int n = (t % 2) ? 8 : 16;
        const auto p4 = eval_shape({ShapeKind::pyramid4, c}, n);
        const auto rx = eval_shape({ShapeKind::roof_x, c}, n);
        const auto ry = eval_shape({ShapeKind::roof_y, c}, n);
        for (std::size_t i = 0; i < p4.size(); ++i) CHECK(p4[i] == rx[i] + ry[i]);
    }
}

TEST_CASE("shape profiles have the expected pointwise values") {
    const int n = 8;
    const double c = 1.5;
    const auto p4 = eval_shape({ShapeKind::pyramid4, c}, n);
    const auto cone = eval_shape({ShapeKind::cone, c}, n);
    const auto iq = eval_shape({ShapeKind::iquad, c}, n);
    auto at = [&](const std::vector<double>& v, int i, int j) { return v[std::size_t(i) * n + j]; };
    CHECK(at(p4, 4, 4) == 0.0);                       // apex
    CHECK(at(p4, 4, 6) == doctest::Approx(2.0 * c));  // xi = (2, 0)
    CHECK(at(p4, 7, 1) == doctest::Approx(6.0 * c));  // xi = (-3, 3)
    CHECK(at(cone, 4, 4) == 0.0);
    CHECK(at(cone, 1, 0) == doctest::Approx(c * std::hypot(4.0, 3.0)));
    CHECK(at(iq, 5, 5) == 0.0);        // first quadrant
    CHECK(at(iq, 5, 3) == kPi / 2);    // xi1 < 0 < xi2
    CHECK(at(iq, 3, 5) == kPi / 2);
    CHECK(at(iq, 3, 3) == 0.0);
    CHECK(at(iq, 4, 2) == 0.0);        // axes belong to the zero set
}

TEST_CASE("pyramid3 is continuous across its sector seams") {
    const int n = 64;
    const double c = 0.8;
    const auto p3 = eval_shape({ShapeKind::pyramid3, c}, n);
    // walk tight angular pairs straddling each seam at several radii
    for (double seam : {kPi / 3, -kPi / 3, kPi}) {
        for (double r : {5.0, 13.0, 21.0}) {
            const double a1 = seam - 1e-9, a2 = seam + 1e-9;
            auto face_val = [&](double th) {
                const double x = r * std::cos(th), y = r * std::sin(th);
                if (th >= -kPi / 3 && th <= kPi / 3) return -2.0 * c * x;
                if (th > kPi / 3 && th < kPi) return c * (x - std::sqrt(3.0) * y);
                return c * (x + std::sqrt(3.0) * y);
            };
            CHECK(face_val(a1) == doctest::Approx(face_val(a2)).epsilon(1e-6));
        }
    }
    // and the sampled grid agrees with the sector formula
    for (int i = 0; i < n; i += 7)
        for (int j = 0; j < n; j += 5) {
            const double x = j - n / 2, y = i - n / 2;
            const double th = std::atan2(y, x);
            double want;
            if (th >= -kPi / 3 && th <= kPi / 3)
                want = -2.0 * c * x;
            else if (th > kPi / 3 && th < kPi)
                want = c * (x - std::sqrt(3.0) * y);
            else
                want = c * (x + std::sqrt(3.0) * y);
            CHECK(p3[std::size_t(i) * n + j] == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("sensor intensity conserves power for every kind") {
    const int n = 64;
    PhaseGrid g = protocol_aperture(n);
    g.values = oracle::random_field(n, 220, -10.0, 10.0);
    g.zero_outside_mask();
    for (ShapeKind k : {ShapeKind::pyramid4, ShapeKind::roof_x, ShapeKind::roof_y,
                        ShapeKind::pyramid3, ShapeKind::cone, ShapeKind::iquad}) {
        const auto I = sensor_intensity(g, {k, 1.0});
        double total = 0.0;
        for (double v : I) total += v;
        CHECK(total == doctest::Approx(double(g.mask_count())).epsilon(1e-10));
    }
}

TEST_CASE("sensor intensity is insensitive to wrapping for every kind") {
    const int n = 64;
    PhaseGrid g = protocol_aperture(n);
    g.values = oracle::random_field(n, 221, -35.0, 35.0);
    g.zero_outside_mask();
    const PhaseGrid w = wrap_phase(g);
    for (ShapeKind k : {ShapeKind::pyramid4, ShapeKind::roof_x, ShapeKind::roof_y,
                        ShapeKind::pyramid3, ShapeKind::cone, ShapeKind::iquad}) {
        const auto a = sensor_intensity(g, {k, 1.0});
        const auto b = sensor_intensity(w, {k, 1.0});
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("zero modulation radius reproduces the static sensor exactly") {
    const int n = 32;
    PhaseGrid g = protocol_aperture(n);
    g.values = oracle::random_field(n, 222, -3.0, 3.0);
    g.zero_outside_mask();
    const auto a = sensor_intensity(g, {ShapeKind::pyramid4, 1.0});
    const auto b = modulated_intensity(g, {ShapeKind::pyramid4, 1.0}, {0.0, 16});
    CHECK(a == b);
}

TEST_CASE("modulation spreads light and keeps power and insensitivity") {
    const int n = 64;
    PhaseGrid g = protocol_aperture(n);
    g.values = oracle::random_field(n, 223, -20.0, 20.0);
    g.zero_outside_mask();
    const ModulationSpec mod{3.0, 12};
    const auto a = modulated_intensity(g, {ShapeKind::pyramid4, 1.0}, mod);
    const auto b = modulated_intensity(wrap_phase(g), {ShapeKind::pyramid4, 1.0}, mod);
    double total = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        total += a[i];
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    CHECK(total == doctest::Approx(double(g.mask_count())).epsilon(1e-10));
    CHECK(worst <= 1e-12);
    const auto unmod = sensor_intensity(g, {ShapeKind::pyramid4, 1.0});
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - unmod[i]);
    CHECK(diff > 1e-3); // modulation actually changes the frame
    CHECK_THROWS_AS(modulated_intensity(g, {ShapeKind::pyramid4, 1.0}, {1.0, 0}),
                    validation_error);
}

TEST_CASE("overlapping pupil images are rejected with a helpful error") {
    const int n = 64;
    PhaseGrid g(n);
    g.mask = make_aperture_mask(n, {ApertureKind::disc, n / 2});
    const auto I = sensor_intensity(g, {ShapeKind::pyramid4, 0.15});
    CHECK_THROWS_WITH_AS(linear_reconstruct_p4(I, g.mask, n, 0.15) /* c far too small */,
                         doctest::Contains("separated"), validation_error);
}

TEST_CASE("linear pyramid reconstruction recovers a small tilt") {
    const int n = 128;
    PhaseGrid truth = protocol_aperture(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) truth.at(i, j) = 2.2 * (j - (n - 1) / 2.0) / n;
    truth.zero_outside_mask();
    const UnwrapReport rep = unwrap_fourier(wrap_phase(truth), {ShapeKind::pyramid4, 1.0},
                                            ReconMode::linear);
    CHECK(rep.method == "p4_linear");
    CHECK(relative_error(rep.phase, truth) <= 10.0);
}

TEST_CASE("adjoint gradient matches finite differences") {
    const int n = 16;
    PhaseGrid g(n);
    g.mask = make_aperture_mask(n, {ApertureKind::disc, 8});
    g.values = oracle::random_field(n, 321, -1.5, 1.5);
    g.zero_outside_mask();
    const auto I = sensor_intensity(g, {ShapeKind::pyramid4, 1.0});

    std::vector<double> phi = oracle::random_field(n, 322, -0.7, 0.7);
    for (std::size_t i = 0; i < phi.size(); ++i)
        if (!g.mask[i]) phi[i] = 0.0;

    std::vector<double> grad;
    nope_objective(phi, I, g.mask, n, {ShapeKind::pyramid4, 1.0}, {}, &grad);
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        std::vector<double> dir(phi.size(), 0.0);
        double dot = 0.0;
        for (std::size_t i = 0; i < dir.size(); ++i)
            if (g.mask[i]) {
                dir[i] = d(rng);
                dot += grad[i] * dir[i];
            }
        const double eps = 1e-6;
        std::vector<double> p1 = phi, p2 = phi;
        for (std::size_t i = 0; i < dir.size(); ++i) {
            p1[i] += eps * dir[i];
            p2[i] -= eps * dir[i];
        }
        const double j1 = nope_objective(p1, I, g.mask, n, {ShapeKind::pyramid4, 1.0});
        const double j2 = nope_objective(p2, I, g.mask, n, {ShapeKind::pyramid4, 1.0});
        const double fd = (j1 - j2) / (2 * eps);
        CHECK(std::abs(fd - dot) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("adjoint gradient also holds under modulation") {
    const int n = 16;
    PhaseGrid g(n);
    g.mask = make_aperture_mask(n, {ApertureKind::disc, 8});
    g.values = oracle::random_field(n, 500, -1.0, 1.0);
    g.zero_outside_mask();
    const ModulationSpec mod{2.0, 6};
    const auto I = modulated_intensity(g, {ShapeKind::pyramid4, 1.0}, mod);
    std::vector<double> phi = oracle::random_field(n, 501, -0.5, 0.5);
    for (std::size_t i = 0; i < phi.size(); ++i)
        if (!g.mask[i]) phi[i] = 0.0;
    std::vector<double> grad;
    nope_objective(phi, I, g.mask, n, {ShapeKind::pyramid4, 1.0}, mod, &grad);
    std::vector<double> dir(phi.size(), 0.0);
    std::mt19937_64 rng(502);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    double dot = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i)
        if (g.mask[i]) {
            dir[i] = d(rng);
            dot += grad[i] * dir[i];
        }
    const double eps = 1e-6;
    std::vector<double> p1 = phi, p2 = phi;
    for (std::size_t i = 0; i < dir.size(); ++i) {
        p1[i] += eps * dir[i];
        p2[i] -= eps * dir[i];
    }
    const double fd = (nope_objective(p1, I, g.mask, n, {ShapeKind::pyramid4, 1.0}, mod) -
                       nope_objective(p2, I, g.mask, n, {ShapeKind::pyramid4, 1.0}, mod)) /
                      (2 * eps);
    CHECK(std::abs(fd - dot) <= 1e-5 * std::max(1.0, std::abs(fd)));
}

TEST_CASE("objective history is monotone and zero phase is a fixed point") {
    const int n = 32;
    PhaseGrid g = protocol_aperture(n);
    const auto I = sensor_intensity(g, {ShapeKind::pyramid4, 1.0});
    UnwrapReport rep;
    const PhaseGrid rec = nonlinear_reconstruct(I, g.mask, n, {ShapeKind::pyramid4, 1.0},
                                                {}, &rep);
    for (double v : rec.values) CHECK(std::abs(v) <= 1e-12);
    CHECK_FALSE(rep.warning);
    for (std::size_t i = 1; i < rep.objective_history.size(); ++i)
        CHECK(rep.objective_history[i] <= rep.objective_history[i - 1] + 1e-15);
}

TEST_CASE("nonlinear pyramid with linear start recovers a wrapped tilt") {
    const int n = 128;
    PhaseGrid truth = protocol_aperture(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) truth.at(i, j) = 6.0 * kPi * (j - (n - 1) / 2.0) / n;
    truth.zero_outside_mask();
    NopeOptions opts;
    opts.start = NopeStart::linear;
    const UnwrapReport rep =
        unwrap_fourier(wrap_phase(truth), {ShapeKind::pyramid4, 1.0}, ReconMode::nonlinear, opts);
    CHECK(rep.method == "fourier:pyramid4");
    CHECK(relative_error(rep.phase, truth) <= 2.0);
}

TEST_CASE("linear start refuses non-pyramid shapes") {
    const int n = 32;
    PhaseGrid g = protocol_aperture(n);
    const auto I = sensor_intensity(g, {ShapeKind::cone, 1.0});
    NopeOptions opts;
    opts.start = NopeStart::linear;
    CHECK_THROWS_AS(nonlinear_reconstruct(I, g.mask, n, {ShapeKind::cone, 1.0}, opts),
                    validation_error);
}

TEST_CASE("roof average combines both roof reconstructions") {
    const int n = 64;
    PhaseGrid truth = protocol_aperture(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            truth.at(i, j) = 1.2 * std::sin(oracle::kTwoPi * j / n) +
                             0.9 * std::cos(oracle::kTwoPi * i / n);
    truth.zero_outside_mask();
    NopeOptions opts;
    opts.max_iters = 60;
    const UnwrapReport rep = unwrap_fourier_roof(wrap_phase(truth), 1.0, opts);
    CHECK(rep.method == "fourier:roof");
    CHECK(rep.phase.n == n);
    double mean = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < rep.phase.values.size(); ++i)
        if (rep.phase.mask[i]) {
            mean += rep.phase.values[i];
            ++cnt;
        }
    CHECK(std::abs(mean / double(cnt)) <= 1e-10);
    CHECK(rep.diagnostics.count("objective_roof_x") == 1);
    CHECK(rep.diagnostics.count("objective_roof_y") == 1);
}

TEST_CASE("reconstruction is deterministic") {
    const int n = 32;
    PhaseGrid g = protocol_aperture(n);
    g.values = oracle::random_field(n, 777, -4.0, 4.0);
    g.zero_outside_mask();
    NopeOptions opts;
    opts.max_iters = 25;
    const UnwrapReport a = unwrap_fourier(g, {ShapeKind::pyramid3, 1.0}, ReconMode::nonlinear, opts);
    const UnwrapReport b = unwrap_fourier(g, {ShapeKind::pyramid3, 1.0}, ReconMode::nonlinear, opts);
    CHECK(a.phase.values == b.phase.values);
    CHECK(a.iterations == b.iterations);
}
