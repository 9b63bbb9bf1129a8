#include "dwfs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "dwfs/errors.hpp"
#include "dwfs/fft.hpp"
#include "dwfs/optics.hpp"

namespace dwfs {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

} // namespace

PhaseGrid unwrap_columnwise(const PhaseGrid& pw) {
    validate(pw);
    const int n = pw.n;
    PhaseGrid out = pw;
    for (int j = 0; j < n; ++j)
        for (int i = 1; i < n; ++i)
            out.at(i, j) = out.at(i - 1, j) + wrap_to_pi(pw.at(i, j) - pw.at(i - 1, j));
    return out;
}

std::vector<double> reliability_map(const PhaseGrid& pw) {
    validate(pw);
    const int n = pw.n;
    std::vector<double> rel(std::size_t(n) * n, 0.0);
    for (int i = 1; i < n - 1; ++i)
        for (int j = 1; j < n - 1; ++j) {
            const double h = wrap_to_pi(pw.at(i, j - 1) - pw.at(i, j)) -
                             wrap_to_pi(pw.at(i, j) - pw.at(i, j + 1));
            const double v = wrap_to_pi(pw.at(i - 1, j) - pw.at(i, j)) -
                             wrap_to_pi(pw.at(i, j) - pw.at(i + 1, j));
            const double d1 = wrap_to_pi(pw.at(i - 1, j - 1) - pw.at(i, j)) -
                              wrap_to_pi(pw.at(i, j) - pw.at(i + 1, j + 1));
            const double d2 = wrap_to_pi(pw.at(i - 1, j + 1) - pw.at(i, j)) -
                              wrap_to_pi(pw.at(i, j) - pw.at(i + 1, j - 1));
            const double d = std::sqrt(h * h + v * v + d1 * d1 + d2 * d2);
            rel[std::size_t(i) * n + j] = d > 0.0 ? 1.0 / d
                                                  : std::numeric_limits<double>::infinity();
        }
    // second differences need a full neighborhood; border pixels inherit the
    // least reliable computable neighbor so they merge last
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i > 0 && i < n - 1 && j > 0 && j < n - 1) continue;
            double m = std::numeric_limits<double>::infinity();
            bool found = false;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int a = i + di, b = j + dj;
                    if (a < 1 || a > n - 2 || b < 1 || b > n - 2) continue;
                    m = std::min(m, rel[std::size_t(a) * n + b]);
                    found = true;
                }
            rel[std::size_t(i) * n + j] = found ? m : 0.0;
        }
    return rel;
}

namespace {

struct Groups {
    std::vector<int> parent;
    std::vector<std::vector<int>> members;

    explicit Groups(int total) : parent(total), members(total) {
        std::iota(parent.begin(), parent.end(), 0);
        for (int i = 0; i < total; ++i) members[i] = {i};
    }
    int find(int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    }
};

} // namespace

PhaseGrid unwrap_mrp(const PhaseGrid& pw) {
    validate(pw);
    const int n = pw.n;
    const std::size_t total = std::size_t(n) * n;
    const std::vector<double> rel = reliability_map(pw);

    struct Edge {
        int a, b;
        double rel;
    };
    std::vector<Edge> edges;
    edges.reserve(2 * total);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int p = i * n + j;
            if (j + 1 < n) edges.push_back({p, p + 1, rel[p] + rel[p + 1]});
            if (i + 1 < n) edges.push_back({p, p + n, rel[p] + rel[p + n]});
        }
    // highest reliability first; enumeration order breaks ties
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& x, const Edge& y) { return x.rel > y.rel; });

    std::vector<long long> k(total, 0); // per-pixel 2*pi multiple
    Groups g(static_cast<int>(total));
    for (const Edge& e : edges) {
        int ra = g.find(e.a), rb = g.find(e.b);
        if (ra == rb) continue;
        const double va = pw.values[e.a] + kTwoPi * double(k[e.a]);
        const double vb = pw.values[e.b] + kTwoPi * double(k[e.b]);
        const double target = va + wrap_to_pi(pw.values[e.b] - pw.values[e.a]);
        const long long shift = std::llround((target - vb) / kTwoPi);
        if (g.members[ra].size() < g.members[rb].size()) std::swap(ra, rb);
        // rb is the smaller group; shift it onto ra's sheet
        const long long delta = ra == g.find(e.a) ? shift : -shift;
        for (int p : g.members[rb]) {
            k[p] += delta;
            g.members[ra].push_back(p);
        }
        g.members[rb].clear();
        g.parent[rb] = ra;
    }

    PhaseGrid out = pw;
    for (std::size_t p = 0; p < total; ++p)
        out.values[p] = pw.values[p] + kTwoPi * double(k[p]);
    return out;
}

PhaseGrid unwrap_pe(const PhaseGrid& pw) {
    validate(pw);
    const int n = pw.n;
    const std::size_t total = std::size_t(n) * n;

    // divergence of the wrapped gradient, zero-flux boundaries
    std::vector<double> dx(total, 0.0), dy(total, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n - 1; ++j)
            dx[std::size_t(i) * n + j] = wrap_to_pi(pw.at(i, j + 1) - pw.at(i, j));
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n; ++j)
            dy[std::size_t(i) * n + j] = wrap_to_pi(pw.at(i + 1, j) - pw.at(i, j));
    std::vector<double> rho(total);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t p = std::size_t(i) * n + j;
            double v = dx[p] + dy[p];
            if (j > 0) v -= dx[p - 1];
            if (i > 0) v -= dy[p - n];
            rho[p] = v;
        }

    // Laplacian inversion on the reflective-boundary cosine basis
    std::vector<double> hat = dct2_forward(rho, n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            const std::size_t p = std::size_t(u) * n + v;
            if (u == 0 && v == 0) {
                hat[p] = 0.0;
                continue;
            }
            const double ev = 2.0 * std::cos(kPi * u / n) + 2.0 * std::cos(kPi * v / n) - 4.0;
            hat[p] /= ev;
        }
    PhaseGrid out = pw;
    out.values = dct2_inverse(hat, n);
    out.remove_piston();
    return out;
}

} // namespace dwfs
