// FFTW-backed centered transforms. The planner is global state, so plan
// creation takes a mutex; executed plans and their buffers live in
// thread-local caches, which keeps execution lock-free and reentrant.

#include "dwfs/fft.hpp"

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <unordered_map>

#include "dwfs/errors.hpp"

namespace dwfs {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct ComplexPlan {
    fftw_plan plan = nullptr;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;

    ComplexPlan(int n, int sign) {
        in = fftw_alloc_complex(std::size_t(n) * n);
        out = fftw_alloc_complex(std::size_t(n) * n);
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(n, n, in, out, sign, FFTW_ESTIMATE);
    }
    ~ComplexPlan() {
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            if (plan) fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }
    ComplexPlan(const ComplexPlan&) = delete;
    ComplexPlan& operator=(const ComplexPlan&) = delete;
};

struct R2RPlan {
    fftw_plan plan = nullptr;
    double* in = nullptr;
    double* out = nullptr;

    R2RPlan(int n, fftw_r2r_kind kind) {
        in = fftw_alloc_real(std::size_t(n) * n);
        out = fftw_alloc_real(std::size_t(n) * n);
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_r2r_2d(n, n, in, out, kind, kind, FFTW_ESTIMATE);
    }
    ~R2RPlan() {
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            if (plan) fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }
    R2RPlan(const R2RPlan&) = delete;
    R2RPlan& operator=(const R2RPlan&) = delete;
};

ComplexPlan& cached_complex_plan(int n, int sign) {
    thread_local std::unordered_map<long, std::unique_ptr<ComplexPlan>> cache;
    const long key = long(n) * 4 + (sign == FFTW_FORWARD ? 0 : 1);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<ComplexPlan>(n, sign)).first;
    return *it->second;
}

R2RPlan& cached_r2r_plan(int n, fftw_r2r_kind kind) {
    thread_local std::unordered_map<long, std::unique_ptr<R2RPlan>> cache;
    const long key = long(n) * 4 + (kind == FFTW_REDFT10 ? 2 : 3);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<R2RPlan>(n, kind)).first;
    return *it->second;
}

// Centered transform = fftshift o FFT o ifftshift; for even n both shifts are
// the same half-grid rotation, folded into the copy in/out.
ComplexField centered_transform(const ComplexField& f, int sign) {
    validate(f);
    const int n = f.n;
    const int h = n / 2;
    ComplexPlan& p = cached_complex_plan(n, sign);
    for (int i = 0; i < n; ++i) {
        const int si = (i + h) % n;
        for (int j = 0; j < n; ++j) {
            const int sj = (j + h) % n;
            const auto v = f.at(i, j);
            p.in[std::size_t(si) * n + sj][0] = v.real();
            p.in[std::size_t(si) * n + sj][1] = v.imag();
        }
    }
    fftw_execute(p.plan);
    ComplexField out(n);
    out.pitch = f.pitch;
    const double scale = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        const int si = (i + h) % n;
        for (int j = 0; j < n; ++j) {
            const int sj = (j + h) % n;
            out.at(i, j) = {p.out[std::size_t(si) * n + sj][0] * scale,
                            p.out[std::size_t(si) * n + sj][1] * scale};
        }
    }
    return out;
}

std::vector<double> r2r_transform(const std::vector<double>& a, int n, fftw_r2r_kind kind,
                                  double scale) {
    if (a.size() != std::size_t(n) * n)
        throw validation_error("dct input does not match n*n");
    R2RPlan& p = cached_r2r_plan(n, kind);
    for (std::size_t i = 0; i < a.size(); ++i) p.in[i] = a[i];
    fftw_execute(p.plan);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = p.out[i] * scale;
    return out;
}

} // namespace

ComplexField dft2_centered(const ComplexField& f) {
    return centered_transform(f, FFTW_FORWARD);
}

ComplexField idft2_centered(const ComplexField& g) {
    return centered_transform(g, FFTW_BACKWARD);
}

std::vector<double> dct2_forward(const std::vector<double>& a, int n) {
    return r2r_transform(a, n, FFTW_REDFT10, 1.0);
}

std::vector<double> dct2_inverse(const std::vector<double>& a, int n) {
    // REDFT01 after REDFT10 multiplies by 2n per dimension.
    return r2r_transform(a, n, FFTW_REDFT01, 1.0 / (4.0 * n * n));
}

} // namespace dwfs
