#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <random>

#include "dwfs/errors.hpp"
#include "dwfs/fft.hpp"
#include "dwfs/grid.hpp"
#include "dwfs/optics.hpp"
#include "dwfs/pgrid_io.hpp"
#include "dwfs/png_io.hpp"
#include "oracles.hpp"

using namespace dwfs;

namespace {
constexpr double kPi = oracle::kPi;
constexpr double kTwoPi = oracle::kTwoPi;
} // namespace

TEST_CASE("wrap_to_pi lands in the principal interval") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-50.0, 50.0);
    for (int t = 0; t < 200; ++t) {
        const double x = d(rng);
        const double w = wrap_to_pi(x);
        CHECK(w > -kPi);
        CHECK(w <= kPi);
        CHECK(std::abs(w - oracle::wrap_reference(x)) <= 1e-12);
    }
}

TEST_CASE("wrap_to_pi boundary conventions") {
    CHECK(wrap_to_pi(kPi) == kPi);
    CHECK(wrap_to_pi(-kPi) == kPi);
    CHECK(wrap_to_pi(3.0 * kPi) == kPi);
    CHECK(wrap_to_pi(0.0) == 0.0);
    CHECK(wrap_to_pi(kPi + 0.1) == doctest::Approx(-kPi + 0.1).epsilon(1e-15));
}

TEST_CASE("wrap_to_pi is exactly idempotent") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> d(-1e4, 1e4);
    for (int t = 0; t < 300; ++t) {
        const double w = wrap_to_pi(d(rng));
        CHECK(wrap_to_pi(w) == w);
    }
}

TEST_CASE("wrap_to_pi preserves the phasor far from the origin") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> mag(0.0, 1e6);
    std::uniform_real_distribution<double> sgn(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        const double x = std::copysign(mag(rng), sgn(rng));
        const double w = wrap_to_pi(x);
        const std::complex<double> a(std::cos(x), std::sin(x));
        const std::complex<double> b(std::cos(w), std::sin(w));
        worst = std::max(worst, std::abs(a - b));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("wrap_phase wraps per pixel and keeps the mask") {
    PhaseGrid g(8);
    g.mask = make_aperture_mask(8, {ApertureKind::disc, 6});
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) g.at(i, j) = 2.5 * kPi * (i - j);
    const PhaseGrid w = wrap_phase(g);
    CHECK(w.mask == g.mask);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) CHECK(w.at(i, j) == wrap_to_pi(g.at(i, j)));
}

TEST_CASE("aperture masks have the expected geometry") {
    const auto disc = make_aperture_mask(16, {ApertureKind::disc, 8});
    const auto square = make_aperture_mask(16, {ApertureKind::square, 8});
    const auto full = make_aperture_mask(16, {ApertureKind::full, 0});
    std::size_t nd = 0, ns = 0, nf = 0;
    for (std::size_t i = 0; i < disc.size(); ++i) {
        nd += disc[i];
        ns += square[i];
        nf += full[i];
    }
    CHECK(nf == 256);
    CHECK(ns >= 64); // 8x8 block plus boundary convention
    CHECK(nd < ns);
    CHECK(nd > 0);
    CHECK_THROWS_AS(make_aperture_mask(16, {ApertureKind::disc, 99}), validation_error);
}

TEST_CASE("centered transforms match direct summation") {
    for (int n : {4, 8}) {
        for (int trial = 0; trial < 3; ++trial) {
            ComplexField f(n);
            f.values = oracle::random_complex_field(n, 100 + n + trial);
            const ComplexField got = dft2_centered(f);
            const auto want = oracle::dft2_direct(f.values, n, -1);
            for (std::size_t i = 0; i < want.size(); ++i)
                CHECK(std::abs(got.values[i] - want[i]) <= 1e-10);
            const ComplexField gotI = idft2_centered(f);
            const auto wantI = oracle::dft2_direct(f.values, n, +1);
            for (std::size_t i = 0; i < wantI.size(); ++i)
                CHECK(std::abs(gotI.values[i] - wantI[i]) <= 1e-10);
        }
    }
}

TEST_CASE("dft2 round trip and Parseval hold on random fields") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 120; ++t) {
        const int n = (t % 2) ? 16 : 32;
        ComplexField f(n);
        f.values = oracle::random_complex_field(n, 400 + t);
        const ComplexField back = idft2_centered(dft2_centered(f));
        const ComplexField spec = dft2_centered(f);
        double in = 0, out = 0, diff = 0, ref = 0;
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            in += std::norm(f.values[i]);
            out += std::norm(spec.values[i]);
            diff += std::norm(back.values[i] - f.values[i]);
            ref += std::norm(f.values[i]);
        }
        CHECK(std::sqrt(diff / ref) <= 1e-10);
        CHECK(std::abs(in - out) / in <= 1e-10);
    }
}

TEST_CASE("a centered delta transforms to a flat spectrum") {
    const int n = 8;
    ComplexField f(n);
    f.at(n / 2, n / 2) = 1.0;
    const ComplexField spec = dft2_centered(f);
    for (const auto& v : spec.values) {
        CHECK(v.real() == doctest::Approx(1.0 / n).epsilon(1e-12));
        CHECK(std::abs(v.imag()) <= 1e-12);
    }
}

TEST_CASE("pupil_field conserves masked power") {
    for (int t = 0; t < 100; ++t) {
        const int n = 16;
        PhaseGrid g(n);
        g.mask = make_aperture_mask(n, {ApertureKind::disc, 4 + (t % 12)});
        g.values = oracle::random_field(n, 600 + t, -20.0, 20.0);
        g.zero_outside_mask();
        const ComplexField e = pupil_field(g);
        double p = 0;
        for (const auto& v : e.values) p += std::norm(v);
        CHECK(p == doctest::Approx(double(g.mask_count())).epsilon(1e-10));
    }
}

TEST_CASE("pupil_field is insensitive to wrapping") {
    const int n = 32;
    PhaseGrid g(n);
    g.mask = make_aperture_mask(n, {ApertureKind::disc, 24});
    g.values = oracle::random_field(n, 7, -40.0, 40.0);
    g.zero_outside_mask();
    const ComplexField a = pupil_field(g);
    const ComplexField b = pupil_field(wrap_phase(g));
    double worst = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    CHECK(worst <= 1e-12);
}

TEST_CASE("cosine transform pair is an identity") {
    const int n = 16;
    const auto x = oracle::random_field(n, 33, -5.0, 5.0);
    const auto back = dct2_inverse(dct2_forward(x, n), n);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("PGRID files round trip with and without masks") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dwfs_io_test";
    fs::create_directories(dir);
    PhaseGrid g(12);
    g.mask = make_aperture_mask(12, {ApertureKind::disc, 10});
    g.values = oracle::random_field(12, 91, -9.0, 9.0);

    const std::string p1 = (dir / "a.pgrid").string();
    save_pgrid(p1, g);
    const PhaseGrid r1 = load_pgrid(p1);
    CHECK(r1.n == g.n);
    CHECK(r1.values == g.values);
    CHECK(r1.mask == g.mask);

    PhaseGrid full(12);
    full.values = g.values;
    const std::string p2 = (dir / "b.pgrid").string();
    save_pgrid(p2, full);
    const PhaseGrid r2 = load_pgrid(p2);
    CHECK(r2.mask_count() == 144);
    CHECK(r2.values == full.values);

    CHECK_THROWS_AS(load_pgrid((dir / "missing.pgrid").string()), io_error);

    // truncated payload must be rejected
    std::FILE* f = std::fopen(p1.c_str(), "rb");
    REQUIRE(f);
    std::vector<char> head(64);
    REQUIRE(std::fread(head.data(), 1, head.size(), f) == head.size());
    std::fclose(f);
    const std::string p3 = (dir / "short.pgrid").string();
    f = std::fopen(p3.c_str(), "wb");
    REQUIRE(f);
    std::fwrite(head.data(), 1, head.size(), f);
    std::fclose(f);
    CHECK_THROWS_AS(load_pgrid(p3), io_error);
}

TEST_CASE("PNG heatmap writes a file and a range sidecar") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dwfs_io_test";
    fs::create_directories(dir);
    PhaseGrid g(16);
    g.mask = make_aperture_mask(16, {ApertureKind::disc, 12});
    g.values = oracle::random_field(16, 55, -2.0, 3.0);
    g.zero_outside_mask();
    const std::string path = (dir / "m.png").string();
    write_png_heatmap(path, g.values, g.n, &g.mask);
    CHECK(fs::exists(path));
    CHECK(fs::file_size(path) > 0);
    CHECK(fs::exists(path + ".txt"));
}

TEST_CASE("phase grids validate their buffers") {
    PhaseGrid g(8);
    g.values[3] = std::nan("");
    CHECK_THROWS_AS(validate(g), validation_error);
    PhaseGrid h(8);
    h.values.pop_back();
    CHECK_THROWS_AS(validate(h), validation_error);
}
