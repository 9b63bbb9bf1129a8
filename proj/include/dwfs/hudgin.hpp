#pragma once

#include <cstdint>
#include <vector>

namespace dwfs {

// Gradient samples on a square node grid. gx/gy hold the local phase change
// per node spacing (radians), defined at the nodes; active marks nodes that
// carry data.
struct GradientField {
    int n = 0;
    std::vector<double> gx, gy;
    std::vector<std::uint8_t> active;
};

struct HudginResult {
    std::vector<double> phi;      // node values, zero-mean per connected component
    std::vector<double> residual_x, residual_y; // per-edge fit residual, at left/upper node
    int cg_iterations = 0;
    double cg_residual = 0.0;     // relative, against the normal-equation rhs
    int components = 0;           // connected components of the active-node graph
};

// Least-squares integration of a gradient field on the Hudgin geometry:
// one difference equation per pair of adjacent active nodes,
//   phi[b] - phi[a] = (g[a] + g[b]) / 2,
// solved via conjugate gradients on the normal equations. Inactive nodes come
// back harmonically extended from the active set so that interpolation across
// the rim stays exact for planes.
HudginResult integrate_gradient(const GradientField& g, double tol, int max_iters);

} // namespace dwfs
