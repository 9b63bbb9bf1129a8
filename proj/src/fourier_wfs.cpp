#include "dwfs/fourier_wfs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "dwfs/errors.hpp"
#include "dwfs/fft.hpp"
#include "dwfs/hudgin.hpp"
#include "dwfs/optics.hpp"

namespace dwfs {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Forward filter: G = idft2(exp(i*psi) . dft2(mask * exp(-i*phi))).
ComplexField filtered_field(const std::vector<double>& phi,
                            const std::vector<std::uint8_t>& mask, int n,
                            const std::vector<double>& psi) {
    ComplexField u(n);
    for (std::size_t i = 0; i < u.values.size(); ++i)
        if (mask[i]) u.values[i] = {std::cos(phi[i]), -std::sin(phi[i])};
    ComplexField U = dft2_centered(u);
    for (std::size_t i = 0; i < U.values.size(); ++i)
        U.values[i] *= std::complex<double>(std::cos(psi[i]), std::sin(psi[i]));
    return idft2_centered(U);
}

// Adjoint of the linear part: W = idft2(exp(-i*psi) . dft2(w)).
ComplexField adjoint_filter(const ComplexField& w, const std::vector<double>& psi) {
    ComplexField W = dft2_centered(w);
    for (std::size_t i = 0; i < W.values.size(); ++i)
        W.values[i] *= std::complex<double>(std::cos(psi[i]), -std::sin(psi[i]));
    return idft2_centered(W);
}

int mask_extent(const std::vector<std::uint8_t>& mask, int n) {
    int imin = n, imax = -1, jmin = n, jmax = -1;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (mask[std::size_t(i) * n + j]) {
                imin = std::min(imin, i); imax = std::max(imax, i);
                jmin = std::min(jmin, j); jmax = std::max(jmax, j);
            }
    if (imax < 0) throw validation_error("empty aperture mask");
    return std::max(imax - imin + 1, jmax - jmin + 1);
}

std::vector<double> modulation_tilt(int n, int d_px, double radius, double t) {
    std::vector<double> tilt(std::size_t(n) * n);
    const double a = kTwoPi * radius / double(d_px);
    const double cx = std::cos(kTwoPi * t), sx = std::sin(kTwoPi * t);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            tilt[std::size_t(i) * n + j] = a * ((j - n / 2) * cx + (i - n / 2) * sx);
    return tilt;
}

} // namespace

const char* to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::pyramid4: return "pyramid4";
        case ShapeKind::roof_x: return "roof_x";
        case ShapeKind::roof_y: return "roof_y";
        case ShapeKind::pyramid3: return "pyramid3";
        case ShapeKind::cone: return "cone";
        case ShapeKind::iquad: return "iquad";
    }
    return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
    if (s == "pyramid4") return ShapeKind::pyramid4;
    if (s == "roof_x") return ShapeKind::roof_x;
    if (s == "roof_y") return ShapeKind::roof_y;
    if (s == "pyramid3") return ShapeKind::pyramid3;
    if (s == "cone") return ShapeKind::cone;
    if (s == "iquad") return ShapeKind::iquad;
    throw validation_error("unknown shape kind: " + s);
}

std::vector<double> eval_shape(const ShapeFunction& sf, int n) {
    if (n < 4 || n % 2 != 0)
        throw validation_error("shape grid must be even and >= 4");
    if (!(sf.c > 0.0) && sf.kind != ShapeKind::iquad)
        throw validation_error("apex steepness c must be positive");
    std::vector<double> psi(std::size_t(n) * n);
    for (int i = 0; i < n; ++i) {
        const double xi2 = i - n / 2;
        for (int j = 0; j < n; ++j) {
            const double xi1 = j - n / 2;
            double v = 0.0;
            switch (sf.kind) {
                case ShapeKind::pyramid4:
                    // written as roof_x + roof_y so the decomposition is exact
                    v = sf.c * std::abs(xi1) + sf.c * std::abs(xi2);
                    break;
                case ShapeKind::roof_x: v = sf.c * std::abs(xi1); break;
                case ShapeKind::roof_y: v = sf.c * std::abs(xi2); break;
                case ShapeKind::pyramid3: {
                    // three 120-degree faces meeting continuously; the sector
                    // angle is measured from the +xi1 axis
                    const double th = std::atan2(xi2, xi1);
                    if (th >= -kPi / 3 && th <= kPi / 3)
                        v = -2.0 * sf.c * xi1;
                    else if (th > kPi / 3 && th < kPi)
                        v = sf.c * (xi1 - std::sqrt(3.0) * xi2);
                    else
                        v = sf.c * (xi1 + std::sqrt(3.0) * xi2);
                    break;
                }
                case ShapeKind::cone: v = sf.c * std::hypot(xi1, xi2); break;
                case ShapeKind::iquad: v = xi1 * xi2 < 0 ? kPi / 2 : 0.0; break;
            }
            psi[std::size_t(i) * n + j] = v;
        }
    }
    return psi;
}

std::vector<double> sensor_intensity(const PhaseGrid& pw, const ShapeFunction& sf) {
    validate(pw);
    if (pw.mask_count() == 0) throw validation_error("empty aperture mask");
    const std::vector<double> psi = eval_shape(sf, pw.n);
    ComplexField g = filtered_field(pw.values, pw.mask, pw.n, psi);
    return intensity(g);
}

std::vector<double> modulated_intensity(const PhaseGrid& pw, const ShapeFunction& sf,
                                        const ModulationSpec& mod) {
    validate(pw);
    if (mod.steps < 1) throw validation_error("modulation steps must be >= 1");
    if (mod.radius < 0.0) throw validation_error("modulation radius must be >= 0");
    if (mod.radius == 0.0) return sensor_intensity(pw, sf);
    const int n = pw.n;
    const int d_px = mask_extent(pw.mask, n);
    const std::vector<double> psi = eval_shape(sf, n);
    std::vector<double> acc(std::size_t(n) * n, 0.0);
    std::vector<double> phi(pw.values.size());
    for (int m = 0; m < mod.steps; ++m) {
        const std::vector<double> tilt = modulation_tilt(n, d_px, mod.radius, double(m) / mod.steps);
        for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = pw.values[i] + tilt[i];
        ComplexField g = filtered_field(phi, pw.mask, n, psi);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::norm(g.values[i]);
    }
    for (auto& v : acc) v /= mod.steps;
    return acc;
}

// ---------------------------------------------------------------------------
// linear (quad-cell style) reconstruction

namespace {

struct PupilRegistration {
    int centers[4][2]; // (row, col) of the +x+y, -x+y, -x-y, +x-y pupil images
};

// Find the four pupil images on a flat-phase calibration frame. Each pyramid
// face sends its light into one frame quadrant, so every quadrant is
// centroided independently (over pixels above a small fraction of the
// quadrant peak, to ignore the faint diffraction background). Registration is
// accepted only when every pupil footprint stays inside its quadrant, which
// is the separation condition on c; modulation sweeps each image on a circle,
// so the footprint widens by the throw radius.
PupilRegistration register_pupils(const std::vector<std::uint8_t>& mask, int n, double c,
                                  const ModulationSpec& mod) {
    PhaseGrid flat(n);
    flat.mask = mask;
    const std::vector<double> cal =
        modulated_intensity(flat, {ShapeKind::pyramid4, c}, mod);

    int r0 = n, r1 = -1, c0 = n, c1 = -1; // mask bounding box
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (mask[std::size_t(i) * n + j]) {
                r0 = std::min(r0, i);
                r1 = std::max(r1, i);
                c0 = std::min(c0, j);
                c1 = std::max(c1, j);
            }

    const char* overlap_msg =
        "pyramid pupil images are not cleanly separated; increase c or reduce the pupil fraction";
    const int half = n / 2;
    // a modulation circle of radius w waves displaces each image by w*n/d px
    const int pad = int(std::ceil(mod.radius * double(n) / double(std::max(r1 - r0, c1 - c0) + 1)));
    PupilRegistration reg{};
    for (int qy = 0; qy < 2; ++qy)
        for (int qx = 0; qx < 2; ++qx) {
            const int rlo = qy ? half : 0, rhi = qy ? n - 1 : half - 1;
            const int clo = qx ? half : 0, chi = qx ? n - 1 : half - 1;
            double qmax = 0.0;
            for (int i = rlo; i <= rhi; ++i)
                for (int j = clo; j <= chi; ++j)
                    qmax = std::max(qmax, cal[std::size_t(i) * n + j]);
            if (!(qmax > 0.0)) throw validation_error(overlap_msg);
            const double thresh = defaults::kPupilRegionThreshold * qmax;
            double power = 0.0, ci = 0.0, cj = 0.0;
            for (int i = rlo; i <= rhi; ++i)
                for (int j = clo; j <= chi; ++j) {
                    const double v = cal[std::size_t(i) * n + j];
                    if (v < thresh) continue;
                    power += v;
                    ci += v * i;
                    cj += v * j;
                }
            const int center_i = int(std::lround(ci / power));
            const int center_j = int(std::lround(cj / power));
            // the registered footprint must not leak across the center lines
            if (center_i + r0 - half - pad < rlo || center_i + r1 - half + pad > rhi ||
                center_j + c0 - half - pad < clo || center_j + c1 - half + pad > chi)
                throw validation_error(overlap_msg);
            // quadrant order: (+x,+y), (-x,+y), (-x,-y), (+x,-y)
            const int slot = qx && qy ? 0 : (!qx && qy ? 1 : (!qx && !qy ? 2 : 3));
            reg.centers[slot][0] = center_i;
            reg.centers[slot][1] = center_j;
        }
    return reg;
}

// Normalized quad-cell signals over the aperture mask.
void quad_signals(const std::vector<double>& I, const std::vector<std::uint8_t>& mask, int n,
                  const PupilRegistration& reg, std::vector<double>& sx,
                  std::vector<double>& sy) {
    const std::size_t total = std::size_t(n) * n;
    sx.assign(total, 0.0);
    sy.assign(total, 0.0);
    std::vector<double> q[4];
    for (auto& v : q) v.assign(total, 0.0);
    double power = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t idx = std::size_t(i) * n + j;
            if (!mask[idx]) continue;
            for (int k = 0; k < 4; ++k) {
                const int ri = reg.centers[k][0] + i - n / 2;
                const int rj = reg.centers[k][1] + j - n / 2;
                if (ri >= 0 && ri < n && rj >= 0 && rj < n)
                    q[k][idx] = I[std::size_t(ri) * n + rj];
            }
            power += q[0][idx] + q[1][idx] + q[2][idx] + q[3][idx];
            ++count;
        }
    const double i0 = power / double(count);
    if (!(i0 > 0.0)) throw validation_error("no light in the registered pupil images");
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (!mask[idx]) continue;
        sx[idx] = (q[0][idx] + q[3][idx] - q[1][idx] - q[2][idx]) / i0;
        sy[idx] = (q[0][idx] + q[1][idx] - q[2][idx] - q[3][idx]) / i0;
    }
}

struct P4Calibration {
    PupilRegistration reg;
    std::vector<double> ref_sx, ref_sy; // flat-frame signals (fixed pattern)
    double gain_x = 0.0, gain_y = 0.0;
};

std::uint64_t mask_fingerprint(const std::vector<std::uint8_t>& mask, int n, double c,
                               const ModulationSpec& mod) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    auto mix_double = [&](double d) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof d);
        std::memcpy(&bits, &d, sizeof d);
        mix(bits);
    };
    mix(std::uint64_t(n));
    mix_double(c);
    mix_double(mod.radius);
    mix(std::uint64_t(mod.radius == 0.0 ? 1 : mod.steps));
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) mix(i);
    return h;
}

// Probe-tilt calibration, cached per (n, c, aperture, modulation).
const P4Calibration& calibration_for(const std::vector<std::uint8_t>& mask, int n, double c,
                                     const ModulationSpec& mod) {
    static std::mutex mu;
    static std::unordered_map<std::uint64_t, std::unique_ptr<P4Calibration>> cache;
    const std::uint64_t key = mask_fingerprint(mask, n, c, mod);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    auto calib = std::make_unique<P4Calibration>();
    calib->reg = register_pupils(mask, n, c, mod);

    // flat-frame reference signals; integer registration leaves a fixed
    // diffraction pattern that would otherwise leak into every measurement
    PhaseGrid flat(n);
    flat.mask = mask;
    const std::vector<double> cal_frame =
        modulated_intensity(flat, {ShapeKind::pyramid4, c}, mod);
    quad_signals(cal_frame, mask, n, calib->reg, calib->ref_sx, calib->ref_sy);

    const int d_px = mask_extent(mask, n);
    const double grad = 2.0 * defaults::kCalibTiltPeak / double(d_px); // rad per pixel
    std::vector<double> sx, sy;
    for (int axis = 0; axis < 2; ++axis) {
        PhaseGrid probe(n);
        probe.mask = mask;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                probe.at(i, j) = grad * ((axis == 0 ? j : i) - (n - 1) / 2.0);
        probe.zero_outside_mask();
        const std::vector<double> I =
            modulated_intensity(probe, {ShapeKind::pyramid4, c}, mod);
        quad_signals(I, mask, n, calib->reg, sx, sy);
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t idx = 0; idx < sx.size(); ++idx)
            if (mask[idx]) {
                acc += axis == 0 ? sx[idx] - calib->ref_sx[idx] : sy[idx] - calib->ref_sy[idx];
                ++cnt;
            }
        const double gain = acc / double(cnt) / grad;
        if (std::abs(gain) < 1e-9)
            throw validation_error("pyramid calibration produced no slope response");
        (axis == 0 ? calib->gain_x : calib->gain_y) = gain;
    }
    it = cache.emplace(key, std::move(calib)).first;
    return *it->second;
}

} // namespace

PhaseGrid linear_reconstruct_p4(const std::vector<double>& I,
                                const std::vector<std::uint8_t>& mask, int n,
                                double c, const ModulationSpec& mod,
                                UnwrapReport* report) {
    if (n < 4 || n % 2 != 0) throw validation_error("grid size must be even and >= 4");
    if (I.size() != std::size_t(n) * n || mask.size() != I.size())
        throw validation_error("intensity/mask buffers do not match n*n");
    for (double v : I)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw validation_error("intensity must be finite and non-negative");
    if (!(c > 0.0)) throw validation_error("apex steepness c must be positive");
    if (mod.steps < 1) throw validation_error("modulation steps must be >= 1");
    if (mod.radius < 0.0) throw validation_error("modulation radius must be >= 0");

    const P4Calibration& calib = calibration_for(mask, n, c, mod);
    std::vector<double> sx, sy;
    quad_signals(I, mask, n, calib.reg, sx, sy);

    GradientField g;
    g.n = n;
    g.active.assign(mask.begin(), mask.end());
    g.gx.resize(sx.size());
    g.gy.resize(sy.size());
    for (std::size_t i = 0; i < sx.size(); ++i) {
        g.gx[i] = (sx[i] - calib.ref_sx[i]) / calib.gain_x;
        g.gy[i] = (sy[i] - calib.ref_sy[i]) / calib.gain_y;
    }
    HudginResult solved = integrate_gradient(g, defaults::kCgTol, defaults::kCgMaxIters);

    PhaseGrid out(n);
    out.mask = mask;
    out.values = std::move(solved.phi);
    out.remove_piston();
    if (report) {
        report->iterations = solved.cg_iterations;
        report->residual = solved.cg_residual;
        report->diagnostics["cg_iterations"] = solved.cg_iterations;
        report->diagnostics["cg_residual"] = solved.cg_residual;
        report->diagnostics["components"] = solved.components;
        report->diagnostics["calib_gain_x"] = calib.gain_x;
        report->diagnostics["calib_gain_y"] = calib.gain_y;
    }
    return out;
}

// ---------------------------------------------------------------------------
// nonlinear reconstruction

namespace {

struct NopeModel {
    const std::vector<std::uint8_t>& mask;
    int n;
    std::vector<double> psi;
    std::vector<std::vector<double>> tilts; // modulation positions, empty = unmodulated
    const std::vector<double>& data;

    // residual r = F(phi) - data, plus the per-step fields needed by the gradient
    double objective(const std::vector<double>& phi, std::vector<double>& r,
                     std::vector<ComplexField>* fields) const {
        const std::size_t total = std::size_t(n) * n;
        std::vector<double> model(total, 0.0);
        const int steps = tilts.empty() ? 1 : int(tilts.size());
        if (fields) fields->clear();
        std::vector<double> shifted(total);
        for (int m = 0; m < steps; ++m) {
            const std::vector<double>* phi_m = &phi;
            if (!tilts.empty()) {
                for (std::size_t i = 0; i < total; ++i) shifted[i] = phi[i] + tilts[m][i];
                phi_m = &shifted;
            }
            ComplexField gfield = filtered_field(*phi_m, mask, n, psi);
            for (std::size_t i = 0; i < total; ++i) model[i] += std::norm(gfield.values[i]);
            if (fields) fields->push_back(std::move(gfield));
        }
        double j = 0.0;
        r.resize(total);
        for (std::size_t i = 0; i < total; ++i) {
            model[i] /= steps;
            r[i] = model[i] - data[i];
            j += r[i] * r[i];
        }
        return 0.5 * j;
    }

    // dJ/dphi given the residual and per-step forward fields
    std::vector<double> gradient(const std::vector<double>& phi, const std::vector<double>& r,
                                 const std::vector<ComplexField>& fields) const {
        const std::size_t total = std::size_t(n) * n;
        std::vector<double> grad(total, 0.0);
        const int steps = int(fields.size());
        for (int m = 0; m < steps; ++m) {
            ComplexField rg(n);
            for (std::size_t i = 0; i < total; ++i) rg.values[i] = r[i] * fields[m].values[i];
            ComplexField w = adjoint_filter(rg, psi);
            for (std::size_t i = 0; i < total; ++i) {
                if (!mask[i]) continue;
                const double ph = tilts.empty() ? phi[i] : phi[i] + tilts[m][i];
                const std::complex<double> e(std::cos(ph), -std::sin(ph));
                grad[i] += 2.0 * std::imag(std::conj(w.values[i]) * e) / steps;
            }
        }
        return grad;
    }
};

} // namespace

double nope_objective(const std::vector<double>& phi, const std::vector<double>& I,
                      const std::vector<std::uint8_t>& mask, int n,
                      const ShapeFunction& sf, const ModulationSpec& mod,
                      std::vector<double>* grad) {
    if (phi.size() != std::size_t(n) * n || I.size() != phi.size() || mask.size() != phi.size())
        throw validation_error("objective buffers do not match n*n");
    NopeModel model{mask, n, eval_shape(sf, n), {}, I};
    if (mod.radius > 0.0) {
        const int d_px = mask_extent(mask, n);
        for (int m = 0; m < mod.steps; ++m)
            model.tilts.push_back(modulation_tilt(n, d_px, mod.radius, double(m) / mod.steps));
    }
    std::vector<double> r;
    std::vector<ComplexField> fields;
    const double j = model.objective(phi, r, grad ? &fields : nullptr);
    if (grad) *grad = model.gradient(phi, r, fields);
    return j;
}

PhaseGrid nonlinear_reconstruct(const std::vector<double>& I,
                                const std::vector<std::uint8_t>& mask, int n,
                                const ShapeFunction& sf, const NopeOptions& opts,
                                UnwrapReport* report) {
    if (n < 4 || n % 2 != 0) throw validation_error("grid size must be even and >= 4");
    if (I.size() != std::size_t(n) * n || mask.size() != I.size())
        throw validation_error("intensity/mask buffers do not match n*n");
    for (double v : I)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw validation_error("intensity must be finite and non-negative");
    if (opts.max_iters < 0 || opts.grad_tol < 0)
        throw validation_error("bad optimizer options");
    if (opts.start == NopeStart::linear && sf.kind != ShapeKind::pyramid4)
        throw validation_error("linear start requires the pyramid4 sensor");

    NopeModel model{mask, n, eval_shape(sf, n), {}, I};
    if (opts.modulation.radius > 0.0) {
        const int d_px = mask_extent(mask, n);
        for (int m = 0; m < opts.modulation.steps; ++m)
            model.tilts.push_back(
                modulation_tilt(n, d_px, opts.modulation.radius, double(m) / opts.modulation.steps));
    }

    const std::size_t total = std::size_t(n) * n;
    std::vector<double> phi(total, 0.0);
    if (opts.start == NopeStart::linear) {
        PhaseGrid lin = linear_reconstruct_p4(I, mask, n, sf.c, opts.modulation, nullptr);
        phi = lin.values;
    }

    // (1 + |xi|^2)^(-s) smoothing filter, centered frequency pixels
    std::vector<double> precond(total);
    for (int i = 0; i < n; ++i) {
        const double xi2 = i - n / 2;
        for (int j = 0; j < n; ++j) {
            const double xi1 = j - n / 2;
            precond[std::size_t(i) * n + j] = std::pow(1.0 + xi1 * xi1 + xi2 * xi2, -opts.s);
        }
    }
    auto preconditioned = [&](const std::vector<double>& grad) {
        ComplexField g(n);
        for (std::size_t i = 0; i < total; ++i) g.values[i] = grad[i];
        ComplexField ghat = dft2_centered(g);
        for (std::size_t i = 0; i < total; ++i) ghat.values[i] *= precond[i];
        ComplexField back = idft2_centered(ghat);
        std::vector<double> out(total);
        for (std::size_t i = 0; i < total; ++i) out[i] = back.values[i].real();
        return out;
    };

    std::vector<double> r;
    std::vector<ComplexField> fields;
    double j_cur = model.objective(phi, r, &fields);
    std::vector<double> best_phi = phi;
    double best_j = j_cur;

    UnwrapReport local;
    UnwrapReport& rep = report ? *report : local;
    rep.objective_history.clear();
    rep.objective_history.push_back(j_cur);
    bool converged = false;
    int iter = 0;
    std::vector<double> trial(total), r_trial;
    // each search starts at twice the last accepted step; the Armijo guard
    // halves it back down, so the step tracks the local curvature scale
    double next_step = defaults::kInitialStep;
    for (; iter < opts.max_iters; ++iter) {
        const std::vector<double> grad = model.gradient(phi, r, fields);
        const std::vector<double> dir = preconditioned(grad);
        double dir_norm2 = 0.0, slope = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            dir_norm2 += dir[i] * dir[i];
            slope -= grad[i] * dir[i]; // descent derivative along -dir
        }
        if (std::sqrt(dir_norm2) <= opts.grad_tol) {
            converged = true;
            break;
        }
        double step = next_step;
        bool accepted = false;
        for (int h = 0; h <= defaults::kMaxHalvings; ++h) {
            for (std::size_t i = 0; i < total; ++i) trial[i] = phi[i] - step * dir[i];
            const double j_trial = model.objective(trial, r_trial, nullptr);
            if (j_trial <= j_cur + defaults::kArmijoC * step * slope) {
                phi.swap(trial);
                j_cur = j_trial;
                accepted = true;
                next_step = std::min(2.0 * step, 1e12);
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            rep.warning = true;
            rep.warning_text = "line search stalled before reaching grad_tol";
            break;
        }
        // refresh fields/residual at the accepted point for the next gradient
        j_cur = model.objective(phi, r, &fields);
        rep.objective_history.push_back(j_cur);
        if (j_cur < best_j) {
            best_j = j_cur;
            best_phi = phi;
        }
    }
    if (!converged && !rep.warning && iter >= opts.max_iters) {
        rep.warning = true;
        rep.warning_text = "max_iters reached before grad_tol";
    }

    PhaseGrid out(n);
    out.mask = mask;
    out.values = std::move(best_phi);
    out.remove_piston();
    rep.iterations = iter;
    rep.residual = best_j;
    rep.diagnostics["objective"] = best_j;
    rep.diagnostics["converged"] = converged ? 1.0 : 0.0;
    return out;
}

UnwrapReport unwrap_fourier(const PhaseGrid& pw, const ShapeFunction& sf,
                            ReconMode mode, const NopeOptions& opts) {
    const auto t0 = Clock::now();
    validate(pw);
    UnwrapReport report;
    const std::vector<double> I = opts.modulation.radius > 0.0
                                      ? modulated_intensity(pw, sf, opts.modulation)
                                      : sensor_intensity(pw, sf);
    if (mode == ReconMode::linear) {
        if (sf.kind != ShapeKind::pyramid4)
            throw validation_error("linear reconstruction requires the pyramid4 sensor");
        report.method = "p4_linear";
        report.phase = linear_reconstruct_p4(I, pw.mask, pw.n, sf.c, opts.modulation, &report);
    } else {
        report.method = std::string("fourier:") + to_string(sf.kind);
        report.phase = nonlinear_reconstruct(I, pw.mask, pw.n, sf, opts, &report);
    }
    report.runtime_ms = ms_since(t0);
    return report;
}

UnwrapReport unwrap_fourier_roof(const PhaseGrid& pw, double c, const NopeOptions& opts) {
    const auto t0 = Clock::now();
    UnwrapReport rx = unwrap_fourier(pw, {ShapeKind::roof_x, c}, ReconMode::nonlinear, opts);
    UnwrapReport ry = unwrap_fourier(pw, {ShapeKind::roof_y, c}, ReconMode::nonlinear, opts);
    UnwrapReport report;
    report.method = "fourier:roof";
    report.phase = rx.phase;
    for (std::size_t i = 0; i < report.phase.values.size(); ++i)
        report.phase.values[i] = 0.5 * (rx.phase.values[i] + ry.phase.values[i]);
    report.phase.remove_piston();
    report.iterations = rx.iterations + ry.iterations;
    report.residual = 0.5 * (rx.residual + ry.residual);
    report.warning = rx.warning || ry.warning;
    if (!rx.warning_text.empty())
        report.warning_text = rx.warning_text;
    else
        report.warning_text = ry.warning_text;
    report.diagnostics["objective_roof_x"] = rx.residual;
    report.diagnostics["objective_roof_y"] = ry.residual;
    report.runtime_ms = ms_since(t0);
    return report;
}

} // namespace dwfs
