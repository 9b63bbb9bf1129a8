// Command-line front end: simulate | wrap | unwrap | evaluate | compare.
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 numerical validation.
// Every option can also come from a flat key=value config file (--config);
// command-line flags win, unknown keys are rejected. Output grids and report
// files contain no wall-clock fields, so reruns with the same seeds are
// byte-identical; timings go to stderr and the compare table only.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "dwfs/baselines.hpp"
#include "dwfs/defaults.hpp"
#include "dwfs/errors.hpp"
#include "dwfs/fourier_wfs.hpp"
#include "dwfs/grid.hpp"
#include "dwfs/metrics.hpp"
#include "dwfs/optics.hpp"
#include "dwfs/pgrid_io.hpp"
#include "dwfs/png_io.hpp"
#include "dwfs/report.hpp"
#include "dwfs/sh_wfs.hpp"
#include "dwfs/sim.hpp"

namespace {

using namespace dwfs;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest decimal form that parses back to the same double. Keeps reports
// exact without printing 17 digits for round values.
std::string num(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

std::string num(double v, int prec) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

int thread_cap() {
    if (const char* env = std::getenv("DWFS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? int(hc) : 1;
}

// Parameters of the unwrapping methods. Defaults mirror the library
// defaults one for one; a round-trip test asserts that.
struct MethodParams {
    int n_sub = defaults::kNSub;
    double c = defaults::kApexC;
    double s = defaults::kNopeS;
    std::string start = "zero";
    double mod_radius = defaults::kModRadius;
    int mod_steps = defaults::kModSteps;
    int max_iters = defaults::kNopeMaxIters;
    double tol = defaults::kNopeGradTol;
};

void add_method_params(CLI::App* app, MethodParams& mp) {
    app->add_option("--n-sub", mp.n_sub, "Subapertures per side (sh)")->capture_default_str();
    app->add_option("--c", mp.c, "Apex steepness, rad per frequency pixel")->capture_default_str();
    app->add_option("--s", mp.s, "Preconditioner exponent (nonlinear methods)")->capture_default_str();
    app->add_option("--start", mp.start, "Nonlinear starting point")
        ->check(CLI::IsMember({"zero", "linear"}))
        ->capture_default_str();
    app->add_option("--mod-radius", mp.mod_radius, "Modulation radius, waves across the aperture")
        ->capture_default_str();
    app->add_option("--mod-steps", mp.mod_steps, "Modulation positions per circle")->capture_default_str();
    app->add_option("--max-iters", mp.max_iters, "Nonlinear iteration cap")->capture_default_str();
    app->add_option("--tol", mp.tol, "Nonlinear gradient tolerance")->capture_default_str();
}

void add_config(CLI::App* app) {
    app->set_config("--config", "", "key=value config file; flags override it");
    app->allow_config_extras(CLI::config_extras_mode::error);
}

const std::vector<std::string> kMethodNames = {
    "columnwise", "mrp", "pe", "sh", "p4_linear", "p4_nope",
    "fourier:pyramid4", "fourier:pyramid3", "fourier:roof_x", "fourier:roof_y",
    "fourier:roof", "fourier:cone", "fourier:iquad"};

// Usage-level screening; data-dependent failures surface later as
// validation errors.
void check_method(const std::string& m, const MethodParams& mp, int n) {
    if (std::find(kMethodNames.begin(), kMethodNames.end(), m) == kMethodNames.end())
        throw usage_error("unknown method '" + m + "'");
    if (mp.mod_steps < 1)
        throw usage_error("--mod-steps: must be >= 1");
    if (mp.mod_radius < 0.0)
        throw usage_error("--mod-radius: must be >= 0");
    if (mp.max_iters < 1)
        throw usage_error("--max-iters: must be >= 1");
    if (m == "sh" && (mp.n_sub < 1 || n % mp.n_sub != 0))
        throw usage_error("--n-sub: " + std::to_string(mp.n_sub) + " does not divide the grid size " +
                          std::to_string(n));
    if (mp.start == "linear" && m.rfind("fourier:", 0) == 0 && m != "fourier:pyramid4")
        throw usage_error("--start linear: only valid for pyramid4 measurements");
}

NopeOptions make_nope(const MethodParams& mp) {
    NopeOptions o;
    o.s = mp.s;
    o.start = mp.start == "linear" ? NopeStart::linear : NopeStart::zero;
    o.max_iters = mp.max_iters;
    o.grad_tol = mp.tol;
    o.modulation = ModulationSpec{mp.mod_radius, mp.mod_steps};
    return o;
}

UnwrapReport run_method(const std::string& m, const MethodParams& mp, const PhaseGrid& pw) {
    using Clock = std::chrono::steady_clock;
    if (m == "columnwise" || m == "mrp" || m == "pe") {
        const auto t0 = Clock::now();
        UnwrapReport r;
        r.method = m;
        r.phase = m == "columnwise" ? unwrap_columnwise(pw)
                : m == "mrp"        ? unwrap_mrp(pw)
                                    : unwrap_pe(pw);
        r.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        return r;
    }
    if (m == "sh")
        return unwrap_sh(pw, mp.n_sub);
    const NopeOptions opts = make_nope(mp);
    if (m == "p4_linear")
        return unwrap_fourier(pw, ShapeFunction{ShapeKind::pyramid4, mp.c}, ReconMode::linear, opts);
    if (m == "p4_nope")
        return unwrap_fourier(pw, ShapeFunction{ShapeKind::pyramid4, mp.c}, ReconMode::nonlinear, opts);
    if (m == "fourier:roof")
        return unwrap_fourier_roof(pw, mp.c, opts);
    const ShapeFunction sf{shape_kind_from_string(m.substr(8)), mp.c};
    return unwrap_fourier(pw, sf, ReconMode::nonlinear, opts);
}

void write_report(const std::string& path, const UnwrapReport& r, const MethodParams& mp, int n) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw io_error("cannot open " + path + " for writing");
    f << "method=" << r.method << "\n";
    f << "n=" << n << "\n";
    f << "n_sub=" << mp.n_sub << "\n";
    f << "c=" << num(mp.c) << "\n";
    f << "s=" << num(mp.s) << "\n";
    f << "start=" << mp.start << "\n";
    f << "mod_radius=" << num(mp.mod_radius) << "\n";
    f << "mod_steps=" << mp.mod_steps << "\n";
    f << "max_iters=" << mp.max_iters << "\n";
    f << "tol=" << num(mp.tol) << "\n";
    f << "iterations=" << r.iterations << "\n";
    f << "residual=" << num(r.residual) << "\n";
    f << "warning=" << (r.warning ? 1 : 0) << "\n";
    f << "warning_text=" << r.warning_text << "\n";
    f << "slope_residual_x=" << num(r.slope_residual_x) << "\n";
    f << "slope_residual_y=" << num(r.slope_residual_y) << "\n";
    for (const auto& [key, value] : r.diagnostics)
        f << "diag." << key << "=" << num(value) << "\n";
    if (!f.good())
        throw io_error("failed to write " + path);
}

ApertureKind aperture_from(const std::string& s) {
    if (s == "disc")
        return ApertureKind::disc;
    if (s == "square")
        return ApertureKind::square;
    if (s == "full")
        return ApertureKind::full;
    throw usage_error("--aperture: unknown kind '" + s + "'");
}

struct SimulateArgs {
    int n = defaults::kProtocolN;
    double r0 = defaults::kR0Px;
    double outer_scale = 0.0; // 0: outer scale = grid size
    std::string aperture = "disc";
    int diameter = 0;         // 0: n / kApertureDivisor
    double noise = defaults::kNoiseLevel;
    std::uint64_t seed = 0;
    int count = 1;
    std::string output;
};

int cmd_simulate(const SimulateArgs& a) {
    if (a.n < 4 || a.n % 2 != 0)
        throw usage_error("--n: must be even and >= 4");
    if (a.count < 1)
        throw usage_error("--count: must be >= 1");
    if (a.noise < 0.0)
        throw usage_error("--noise: must be >= 0");
    ApertureSpec ap;
    ap.kind = aperture_from(a.aperture);
    ap.diameter_px = a.diameter > 0 ? a.diameter : a.n / defaults::kApertureDivisor;
    if (ap.kind != ApertureKind::full && (ap.diameter_px < 1 || ap.diameter_px > a.n))
        throw usage_error("--diameter: must be in [1, n]");

    const std::string manifest_path = a.output + "_manifest.txt";
    std::ofstream mf(manifest_path, std::ios::binary);
    if (!mf)
        throw io_error("cannot open " + manifest_path + " for writing");
    mf << "n=" << a.n << "\n";
    mf << "r0=" << num(a.r0) << "\n";
    mf << "outer_scale=" << num(a.outer_scale) << "\n";
    mf << "aperture=" << a.aperture << "\n";
    mf << "diameter=" << ap.diameter_px << "\n";
    mf << "noise=" << num(a.noise) << "\n";
    mf << "seed=" << a.seed << "\n";
    mf << "count=" << a.count << "\n";

    for (int k = 0; k < a.count; ++k) {
        const std::uint64_t seed = a.seed + std::uint64_t(k);
        ScreenSpec sc;
        sc.n = a.n;
        sc.r0_px = a.r0;
        sc.seed = seed;
        sc.outer_scale_px = a.outer_scale;
        const ProtocolFrame frame = make_protocol_frame(sc, ap, a.noise);
        const std::string stem = a.output + "_seed" + std::to_string(seed);
        save_pgrid(stem + "_truth.pgrid", frame.truth);
        save_pgrid(stem + "_wrapped.pgrid", frame.wrapped);
        save_pgrid(stem + "_noisy.pgrid", frame.noisy);
        mf << "frame." << k << ".seed=" << seed << "\n";
        mf << "frame." << k << ".truth=" << stem << "_truth.pgrid\n";
        mf << "frame." << k << ".wrapped=" << stem << "_wrapped.pgrid\n";
        mf << "frame." << k << ".noisy=" << stem << "_noisy.pgrid\n";
    }
    if (!mf.good())
        throw io_error("failed to write " + manifest_path);
    return kExitOk;
}

struct WrapArgs {
    std::string input;
    std::string output;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

int cmd_wrap(const WrapArgs& a) {
    if (a.noise < 0.0)
        throw usage_error("--noise: must be >= 0");
    const PhaseGrid in = load_pgrid(a.input);
    PhaseGrid out = wrap_phase(in);
    if (a.noise > 0.0)
        out = apply_noise(out, a.noise, a.seed);
    save_pgrid(a.output, out);
    return kExitOk;
}

struct UnwrapArgs {
    std::string input;
    std::string output;
    std::string png;
    std::string method;
    MethodParams mp;
};

int cmd_unwrap(const UnwrapArgs& a) {
    const PhaseGrid pw = load_pgrid(a.input);
    check_method(a.method, a.mp, pw.n);
    const UnwrapReport r = run_method(a.method, a.mp, pw);
    save_pgrid(a.output, r.phase);
    write_report(a.output + ".report.txt", r, a.mp, pw.n);
    if (!a.png.empty())
        write_png_heatmap(a.png, r.phase.values, r.phase.n, &r.phase.mask);
    std::fprintf(stderr, "%s: %d iterations, %.1f ms%s\n", r.method.c_str(), r.iterations,
                 r.runtime_ms, r.warning ? " (warning, see report)" : "");
    return kExitOk;
}

struct EvaluateArgs {
    std::string input;
    std::string truth;
    std::string output;
};

int cmd_evaluate(const EvaluateArgs& a) {
    const PhaseGrid rec = load_pgrid(a.input);
    const PhaseGrid truth = load_pgrid(a.truth);
    const MetricReport m = evaluate(rec, truth);
    std::ostringstream out;
    out << "rel_error_pct=" << num(m.rel_error_pct) << "\n";
    out << "ssim=" << num(m.ssim) << "\n";
    out << "ms_ssim=" << num(m.ms_ssim) << "\n";
    out << "ms_ssim_truncated=" << (m.ms_ssim_truncated ? 1 : 0) << "\n";
    out << "residues=" << m.residues << "\n";
    std::fputs(out.str().c_str(), stdout);
    if (!a.output.empty()) {
        std::ofstream f(a.output, std::ios::binary);
        if (!f)
            throw io_error("cannot open " + a.output + " for writing");
        f << out.str();
        if (!f.good())
            throw io_error("failed to write " + a.output);
    }
    return kExitOk;
}

struct CompareArgs {
    std::string truth;
    std::string output;
    std::vector<std::string> methods;
    int seeds = defaults::kProtocolSeeds;
    std::uint64_t seed = 0;
    double noise = defaults::kNoiseLevel;
    MethodParams mp;
};

struct CompareCell {
    MetricReport metrics;
    double runtime_ms = 0.0;
};

int cmd_compare(const CompareArgs& a) {
    std::vector<std::string> methods;
    for (const auto& entry : a.methods) {
        std::stringstream ss(entry);
        std::string token;
        while (std::getline(ss, token, ','))
            if (!token.empty())
                methods.push_back(token);
    }
    if (methods.empty())
        throw usage_error("--method: at least one method is required");
    if (a.seeds < 1)
        throw usage_error("--seeds: must be >= 1");
    if (a.noise < 0.0)
        throw usage_error("--noise: must be >= 0");

    const PhaseGrid truth = load_pgrid(a.truth);
    for (const auto& m : methods)
        check_method(m, a.mp, truth.n);

    const PhaseGrid wrapped = wrap_phase(truth);
    std::vector<PhaseGrid> noisy;
    noisy.reserve(std::size_t(a.seeds));
    for (int s = 0; s < a.seeds; ++s)
        noisy.push_back(a.noise > 0.0 ? apply_noise(wrapped, a.noise, a.seed + std::uint64_t(s))
                                      : wrapped);

    // one cell per (method, seed), run on a small worker pool
    const std::size_t total = methods.size() * std::size_t(a.seeds);
    std::vector<CompareCell> cells(total);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total)
                return;
            try {
                const std::size_t mi = i / std::size_t(a.seeds);
                const std::size_t si = i % std::size_t(a.seeds);
                const UnwrapReport r = run_method(methods[mi], a.mp, noisy[si]);
                cells[i].metrics = evaluate(r.phase, truth);
                cells[i].runtime_ms = r.runtime_ms;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(total);
                return;
            }
        }
    };
    const int workers = std::min<std::size_t>(std::size_t(thread_cap()), total);
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);

    auto mean_std = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs)
            mean += x;
        mean /= double(xs.size());
        double var = 0.0;
        for (double x : xs)
            var += (x - mean) * (x - mean);
        var = xs.size() > 1 ? var / double(xs.size() - 1) : 0.0;
        return std::pair<double, double>(mean, std::sqrt(var));
    };

    std::ostringstream table;
    table << "method,rel_err_pct_mean,rel_err_pct_std,ssim_mean,ssim_std,"
             "ms_ssim_mean,ms_ssim_std,residues_mean,runtime_ms_mean\n";
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::vector<double> err, ss, mss, res, rt;
        for (int s = 0; s < a.seeds; ++s) {
            const CompareCell& c = cells[mi * std::size_t(a.seeds) + std::size_t(s)];
            err.push_back(c.metrics.rel_error_pct);
            ss.push_back(c.metrics.ssim);
            mss.push_back(c.metrics.ms_ssim);
            res.push_back(double(c.metrics.residues));
            rt.push_back(c.runtime_ms);
        }
        const auto [em, es] = mean_std(err);
        const auto [sm, sd] = mean_std(ss);
        const auto [mm, md] = mean_std(mss);
        const auto [rm, _unused] = mean_std(res);
        const auto [tm, _unused2] = mean_std(rt);
        table << methods[mi] << ',' << num(em, 6) << ',' << num(es, 6) << ',' << num(sm, 6) << ','
              << num(sd, 6) << ',' << num(mm, 6) << ',' << num(md, 6) << ',' << num(rm, 6) << ','
              << num(tm, 6) << "\n";
    }
    std::fputs(table.str().c_str(), stdout);
    if (!a.output.empty()) {
        std::ofstream f(a.output, std::ios::binary);
        if (!f)
            throw io_error("cannot open " + a.output + " for writing");
        f << table.str();
        if (!f.good())
            throw io_error("failed to write " + a.output);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase unwrapping via simulated wavefront sensing: simulate screens, wrap, "
                 "unwrap, evaluate, compare"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* sim_app = app.add_subcommand("simulate", "Write truth/wrapped/noisy grid triplets");
    add_config(sim_app);
    sim_app->add_option("--n", sim.n, "Grid size (even)")->capture_default_str();
    sim_app->add_option("--r0", sim.r0, "Turbulence strength scale, px")->capture_default_str();
    sim_app->add_option("--outer-scale", sim.outer_scale, "Outer scale, px (0: grid size)")
        ->capture_default_str();
    sim_app->add_option("--aperture", sim.aperture, "disc | square | full")->capture_default_str();
    sim_app->add_option("--diameter", sim.diameter, "Aperture diameter, px (0: n/4)")
        ->capture_default_str();
    sim_app->add_option("--noise", sim.noise, "Noise level, fraction of wrapped rms")
        ->capture_default_str();
    sim_app->add_option("--seed", sim.seed, "First seed")->capture_default_str();
    sim_app->add_option("--count", sim.count, "Number of consecutive seeds")->capture_default_str();
    sim_app->add_option("--output", sim.output, "Output path prefix")->required();

    WrapArgs wrap;
    CLI::App* wrap_app = app.add_subcommand("wrap", "Wrap a phase grid, optionally adding noise");
    add_config(wrap_app);
    wrap_app->add_option("--input", wrap.input, "Input PGRID")->required();
    wrap_app->add_option("--output", wrap.output, "Output PGRID")->required();
    wrap_app->add_option("--noise", wrap.noise, "Noise level, fraction of wrapped rms")
        ->capture_default_str();
    wrap_app->add_option("--seed", wrap.seed, "Noise seed")->capture_default_str();

    UnwrapArgs unwrap;
    CLI::App* unwrap_app = app.add_subcommand("unwrap", "Unwrap a measured grid");
    add_config(unwrap_app);
    unwrap_app->add_option("--input", unwrap.input, "Input PGRID (wrapped measurement)")->required();
    unwrap_app->add_option("--output", unwrap.output, "Output PGRID; report goes to <output>.report.txt")
        ->required();
    unwrap_app->add_option("--png", unwrap.png, "Also write a heatmap PNG here")->capture_default_str();
    unwrap_app
        ->add_option("--method", unwrap.method,
                     "columnwise | mrp | pe | sh | p4_linear | p4_nope | fourier:<kind>")
        ->required();
    add_method_params(unwrap_app, unwrap.mp);

    EvaluateArgs eval;
    CLI::App* eval_app = app.add_subcommand("evaluate", "Score a reconstruction against a truth grid");
    add_config(eval_app);
    eval_app->add_option("--input", eval.input, "Reconstruction PGRID")->required();
    eval_app->add_option("--truth", eval.truth, "Ground-truth PGRID")->required();
    eval_app->add_option("--output", eval.output, "Also write the key=value report here")
        ->capture_default_str();

    CompareArgs cmp;
    CLI::App* cmp_app =
        app.add_subcommand("compare", "Run several methods over noise seeds and tabulate metrics");
    add_config(cmp_app);
    cmp_app->add_option("--truth", cmp.truth, "Ground-truth PGRID")->required();
    cmp_app->add_option("--method", cmp.methods, "Method list (repeat or comma-separate)");
    cmp_app->add_option("--seeds", cmp.seeds, "Number of noise seeds")->capture_default_str();
    cmp_app->add_option("--seed", cmp.seed, "First noise seed")->capture_default_str();
    cmp_app->add_option("--noise", cmp.noise, "Noise level, fraction of wrapped rms")
        ->capture_default_str();
    cmp_app->add_option("--output", cmp.output, "Also write the table here")->capture_default_str();
    add_method_params(cmp_app, cmp.mp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sim_app->parsed())
            return cmd_simulate(sim);
        if (wrap_app->parsed())
            return cmd_wrap(wrap);
        if (unwrap_app->parsed())
            return cmd_unwrap(unwrap);
        if (eval_app->parsed())
            return cmd_evaluate(eval);
        return cmd_compare(cmp);
    } catch (const usage_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}
