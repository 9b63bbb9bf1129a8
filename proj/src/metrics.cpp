#include "dwfs/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "dwfs/errors.hpp"
#include "dwfs/optics.hpp"

namespace dwfs {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
// canonical five-scale weights
constexpr double kScaleWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct Patch {
    int h = 0, w = 0;
    std::vector<double> v;
    double& at(int i, int j) { return v[std::size_t(i) * w + j]; }
    double at(int i, int j) const { return v[std::size_t(i) * w + j]; }
};

// piston-aligned, zeroed outside the mask, cropped to the mask bounding box
Patch masked_crop(const PhaseGrid& g) {
    const int n = g.n;
    int imin = n, imax = -1, jmin = n, jmax = -1;
    double mean = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (g.mask[std::size_t(i) * n + j]) {
                imin = std::min(imin, i); imax = std::max(imax, i);
                jmin = std::min(jmin, j); jmax = std::max(jmax, j);
                mean += g.at(i, j);
                ++count;
            }
    if (imax < 0) throw validation_error("empty aperture mask");
    mean /= double(count);
    Patch p;
    p.h = imax - imin + 1;
    p.w = jmax - jmin + 1;
    p.v.assign(std::size_t(p.h) * p.w, 0.0);
    for (int i = imin; i <= imax; ++i)
        for (int j = jmin; j <= jmax; ++j)
            if (g.mask[std::size_t(i) * n + j])
                p.at(i - imin, j - jmin) = g.at(i, j) - mean;
    return p;
}

// map the patch onto [0, range]; flat inputs become all zeros
void rescale_to(Patch& p, double range) {
    const auto [mn, mx] = std::minmax_element(p.v.begin(), p.v.end());
    const double span = *mx - *mn;
    if (span <= 0.0 || range <= 0.0) {
        std::fill(p.v.begin(), p.v.end(), 0.0);
        return;
    }
    for (auto& x : p.v) x = (x - *mn) * (range / span);
}

std::vector<double> gaussian_kernel(int w) {
    std::vector<double> k(w);
    const double mid = (w - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < w; ++i) {
        k[i] = std::exp(-0.5 * (i - mid) * (i - mid) / (kSigma * kSigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// valid-mode windowed moments; returns per-window luminance and contrast-structure terms
void ssim_terms(const Patch& a, const Patch& b, double range, double& lum, double& cs) {
    const int w = std::min({kWindow, a.h, a.w});
    const std::vector<double> k = gaussian_kernel(w);
    const double c1 = (kK1 * range) * (kK1 * range);
    const double c2 = (kK2 * range) * (kK2 * range);
    const int oh = a.h - w + 1, ow = a.w - w + 1;
    double lsum = 0.0, csum = 0.0;
    for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int y = 0; y < w; ++y)
                for (int x = 0; x < w; ++x) {
                    const double wt = k[y] * k[x];
                    const double va = a.at(i + y, j + x), vb = b.at(i + y, j + x);
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            saa -= ma * ma;
            sbb -= mb * mb;
            sab -= ma * mb;
            lsum += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
            csum += (2 * sab + c2) / (saa + sbb + c2);
        }
    lum = lsum / (double(oh) * ow);
    cs = csum / (double(oh) * ow);
}

Patch downsample2(const Patch& p) {
    Patch q;
    q.h = p.h / 2;
    q.w = p.w / 2;
    q.v.resize(std::size_t(q.h) * q.w);
    for (int i = 0; i < q.h; ++i)
        for (int j = 0; j < q.w; ++j)
            q.at(i, j) = 0.25 * (p.at(2 * i, 2 * j) + p.at(2 * i, 2 * j + 1) +
                                 p.at(2 * i + 1, 2 * j) + p.at(2 * i + 1, 2 * j + 1));
    return q;
}

void prepare(const PhaseGrid& rec, const PhaseGrid& truth, Patch& a, Patch& b, double& range) {
    validate(rec);
    validate(truth);
    if (rec.n != truth.n || rec.mask != truth.mask)
        throw validation_error("metric inputs must share grid size and mask");
    a = masked_crop(rec);
    b = masked_crop(truth);
    const auto [mn, mx] = std::minmax_element(b.v.begin(), b.v.end());
    range = *mx - *mn;
    if (range <= 0.0) range = 1.0;
    rescale_to(a, range);
    rescale_to(b, range);
}

} // namespace

double relative_error(const PhaseGrid& rec, const PhaseGrid& truth) {
    validate(rec);
    validate(truth);
    if (rec.n != truth.n || rec.mask != truth.mask)
        throw validation_error("metric inputs must share grid size and mask");
    double mr = 0.0, mt = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < rec.values.size(); ++i)
        if (rec.mask[i]) {
            mr += rec.values[i];
            mt += truth.values[i];
            ++count;
        }
    if (count == 0) throw validation_error("empty aperture mask");
    mr /= double(count);
    mt /= double(count);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < rec.values.size(); ++i)
        if (rec.mask[i]) {
            const double d = (rec.values[i] - mr) - (truth.values[i] - mt);
            const double t = truth.values[i] - mt;
            num += d * d;
            den += t * t;
        }
    if (den <= 0.0) throw validation_error("truth has zero norm after piston removal");
    return 100.0 * std::sqrt(num / den);
}

double ssim(const PhaseGrid& rec, const PhaseGrid& truth) {
    Patch a, b;
    double range;
    prepare(rec, truth, a, b, range);
    double lum, cs;
    ssim_terms(a, b, range, lum, cs);
    return lum * cs;
}

double ms_ssim(const PhaseGrid& rec, const PhaseGrid& truth, bool* truncated) {
    Patch a, b;
    double range;
    prepare(rec, truth, a, b, range);

    double lum = 1.0, cs_terms[5];
    int scales = 0;
    for (int s = 0; s < 5; ++s) {
        double l, cs;
        ssim_terms(a, b, range, l, cs);
        cs_terms[s] = std::max(cs, 0.0);
        lum = std::max(l, 0.0);
        scales = s + 1;
        if (s == 4) break;
        if (a.h / 2 < kWindow || a.w / 2 < kWindow) break; // next scale would not fit
        a = downsample2(a);
        b = downsample2(b);
    }
    if (truncated) *truncated = scales < 5;

    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) wsum += kScaleWeights[s];
    double value = std::pow(lum, kScaleWeights[scales - 1] / wsum);
    for (int s = 0; s < scales; ++s)
        value *= std::pow(cs_terms[s], kScaleWeights[s] / wsum);
    return std::clamp(value, 0.0, 1.0);
}

long count_residues(const PhaseGrid& pw) {
    validate(pw);
    const int n = pw.n;
    long count = 0;
    for (int i = 0; i + 1 < n; ++i)
        for (int j = 0; j + 1 < n; ++j) {
            if (!pw.inside(i, j) || !pw.inside(i, j + 1) || !pw.inside(i + 1, j) ||
                !pw.inside(i + 1, j + 1))
                continue;
            const double loop = wrap_to_pi(pw.at(i, j + 1) - pw.at(i, j)) +
                                wrap_to_pi(pw.at(i + 1, j + 1) - pw.at(i, j + 1)) +
                                wrap_to_pi(pw.at(i + 1, j) - pw.at(i + 1, j + 1)) +
                                wrap_to_pi(pw.at(i, j) - pw.at(i + 1, j));
            if (std::abs(loop) > kPi) ++count;
        }
    return count;
}

MetricReport evaluate(const PhaseGrid& rec, const PhaseGrid& truth) {
    const auto t0 = std::chrono::steady_clock::now();
    MetricReport rep;
    rep.rel_error_pct = relative_error(rec, truth);
    rep.ssim = ssim(rec, truth);
    rep.ms_ssim = ms_ssim(rec, truth, &rep.ms_ssim_truncated);
    rep.residues = count_residues(rec);
    rep.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace dwfs
