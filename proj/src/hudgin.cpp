// Zonal least-squares wavefront integration. The edge equations live on the
// active-node graph; the normal equations form a graph Laplacian, solved with
// plain conjugate gradients (the rhs is orthogonal to the per-component
// constant nullspace, so CG from zero converges to the minimum-norm answer).

#include "dwfs/hudgin.hpp"

#include <cmath>
#include <vector>

#include "dwfs/errors.hpp"

namespace dwfs {

namespace {

struct Edge {
    int a, b;   // node indices, phi[b] - phi[a] = d
    double d;
};

// y = L x where L is the Laplacian of the edge graph.
void apply_laplacian(const std::vector<Edge>& edges, const std::vector<double>& x,
                     std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (const auto& e : edges) {
        const double d = x[e.b] - x[e.a];
        y[e.b] += d;
        y[e.a] -= d;
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Dirichlet-energy fill of the inactive nodes. The active data is first
// reduced by its least-squares plane so that planar fields extend exactly;
// the harmonic solve only sees the residual.
void fill_inactive(int n, const std::vector<std::uint8_t>& active, std::vector<double>& phi) {
    // plane fit over active nodes
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, sv = 0, svx = 0, svy = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const int idx = r * n + c;
            if (!active[idx]) continue;
            const double x = c, y = r, v = phi[idx];
            sw += 1; sx += x; sy += y;
            sxx += x * x; sxy += x * y; syy += y * y;
            sv += v; svx += v * x; svy += v * y;
        }
    double p0 = 0, px = 0, py = 0;
    // 3x3 normal equations by Cramer; fall back to the mean when degenerate
    const double m[3][3] = {{sw, sx, sy}, {sx, sxx, sxy}, {sy, sxy, syy}};
    const double rhs[3] = {sv, svx, svy};
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (std::abs(det) > 1e-12 * std::max(1.0, sw * sw * sw)) {
        auto solve = [&](int col) {
            double a[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) a[i][j] = j == col ? rhs[i] : m[i][j];
            return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                    a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                    a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])) /
                   det;
        };
        p0 = solve(0); px = solve(1); py = solve(2);
    } else if (sw > 0) {
        p0 = sv / sw;
    }

    const std::size_t total = std::size_t(n) * n;
    std::vector<double> res(total, 0.0);
    for (std::size_t i = 0; i < total; ++i)
        if (active[i]) res[i] = phi[i] - (p0 + px * double(i % n) + py * double(i / n));

    // CG on the inactive block: L_ii r_i = -L_ia r_a
    std::vector<int> inactive_ids;
    inactive_ids.reserve(total);
    for (std::size_t i = 0; i < total; ++i)
        if (!active[i]) inactive_ids.push_back(int(i));
    if (!inactive_ids.empty()) {
        const int m_in = int(inactive_ids.size());
        std::vector<int> pos(total, -1);
        for (int k = 0; k < m_in; ++k) pos[inactive_ids[k]] = k;
        auto neighbors = [&](int idx, int out[4]) {
            const int r = idx / n, c = idx % n;
            int cnt = 0;
            if (r > 0) out[cnt++] = idx - n;
            if (r < n - 1) out[cnt++] = idx + n;
            if (c > 0) out[cnt++] = idx - 1;
            if (c < n - 1) out[cnt++] = idx + 1;
            return cnt;
        };
        auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
            for (int k = 0; k < m_in; ++k) {
                const int idx = inactive_ids[k];
                int nb[4];
                const int cnt = neighbors(idx, nb);
                double acc = cnt * x[k];
                for (int t = 0; t < cnt; ++t)
                    if (pos[nb[t]] >= 0) acc -= x[pos[nb[t]]];
                y[k] = acc;
            }
        };
        std::vector<double> b(m_in, 0.0);
        for (int k = 0; k < m_in; ++k) {
            const int idx = inactive_ids[k];
            int nb[4];
            const int cnt = neighbors(idx, nb);
            for (int t = 0; t < cnt; ++t)
                if (pos[nb[t]] < 0) b[k] += res[nb[t]];
        }
        std::vector<double> x(m_in, 0.0), r = b, p = r, ap(m_in);
        double rr = dot(r, r);
        const double stop = 1e-20 * std::max(1.0, dot(b, b));
        for (int it = 0; it < 4 * m_in + 100 && rr > stop; ++it) {
            apply(p, ap);
            const double alpha = rr / std::max(dot(p, ap), 1e-300);
            for (int k = 0; k < m_in; ++k) { x[k] += alpha * p[k]; r[k] -= alpha * ap[k]; }
            const double rr_new = dot(r, r);
            for (int k = 0; k < m_in; ++k) p[k] = r[k] + (rr_new / rr) * p[k];
            rr = rr_new;
        }
        for (int k = 0; k < m_in; ++k) res[inactive_ids[k]] = x[k];
    }

    for (std::size_t i = 0; i < total; ++i)
        if (!active[i]) phi[i] = res[i] + p0 + px * double(i % n) + py * double(i / n);
}

} // namespace

HudginResult integrate_gradient(const GradientField& g, double tol, int max_iters) {
    const int n = g.n;
    const std::size_t total = std::size_t(n) * n;
    if (n < 1 || g.gx.size() != total || g.gy.size() != total || g.active.size() != total)
        throw validation_error("gradient field buffers do not match n*n");
    bool any = false;
    for (auto a : g.active) any |= a != 0;
    if (!any) throw validation_error("gradient field has no active nodes");

    std::vector<Edge> edges;
    edges.reserve(2 * total);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const int idx = r * n + c;
            if (!g.active[idx]) continue;
            if (c + 1 < n && g.active[idx + 1])
                edges.push_back({idx, idx + 1, 0.5 * (g.gx[idx] + g.gx[idx + 1])});
            if (r + 1 < n && g.active[idx + n])
                edges.push_back({idx, idx + n, 0.5 * (g.gy[idx] + g.gy[idx + n])});
        }

    HudginResult out;
    out.phi.assign(total, 0.0);
    out.residual_x.assign(total, 0.0);
    out.residual_y.assign(total, 0.0);

    // rhs = A^T d
    std::vector<double> b(total, 0.0);
    for (const auto& e : edges) {
        b[e.b] += e.d;
        b[e.a] -= e.d;
    }

    std::vector<double> r = b, p = r, ap(total);
    double rr = dot(r, r);
    const double bb = dot(b, b);
    const double stop = tol * tol * std::max(bb, 1e-300);
    int iters = 0;
    while (iters < max_iters && rr > stop) {
        apply_laplacian(edges, p, ap);
        const double pap = dot(p, ap);
        if (pap <= 0) break; // nullspace direction; rhs is consistent, we are done
        const double alpha = rr / pap;
        for (std::size_t i = 0; i < total; ++i) {
            out.phi[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        for (std::size_t i = 0; i < total; ++i) p[i] = r[i] + (rr_new / rr) * p[i];
        rr = rr_new;
        ++iters;
    }
    out.cg_iterations = iters;
    out.cg_residual = bb > 0 ? std::sqrt(rr / bb) : 0.0;

    // connected components of the active graph; zero mean per component
    std::vector<int> comp(total, -1);
    int n_comp = 0;
    {
        std::vector<std::vector<int>> adj(total);
        for (const auto& e : edges) {
            adj[e.a].push_back(e.b);
            adj[e.b].push_back(e.a);
        }
        std::vector<int> stack;
        for (std::size_t s = 0; s < total; ++s) {
            if (!g.active[s] || comp[s] >= 0) continue;
            stack.push_back(int(s));
            comp[s] = n_comp;
            while (!stack.empty()) {
                const int v = stack.back();
                stack.pop_back();
                for (int u : adj[v])
                    if (comp[u] < 0) {
                        comp[u] = n_comp;
                        stack.push_back(u);
                    }
            }
            ++n_comp;
        }
    }
    out.components = n_comp;
    std::vector<double> mean(n_comp, 0.0);
    std::vector<int> cnt(n_comp, 0);
    for (std::size_t i = 0; i < total; ++i)
        if (comp[i] >= 0) {
            mean[comp[i]] += out.phi[i];
            ++cnt[comp[i]];
        }
    for (int k = 0; k < n_comp; ++k) mean[k] /= std::max(cnt[k], 1);
    for (std::size_t i = 0; i < total; ++i)
        if (comp[i] >= 0) out.phi[i] -= mean[comp[i]];

    for (const auto& e : edges) {
        const double res = out.phi[e.b] - out.phi[e.a] - e.d;
        if (e.b == e.a + 1)
            out.residual_x[e.a] = res;
        else
            out.residual_y[e.a] = res;
    }

    fill_inactive(n, g.active, out.phi);
    return out;
}

} // namespace dwfs
