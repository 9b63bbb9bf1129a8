#pragma once

#include <map>
#include <string>
#include <vector>

#include "dwfs/grid.hpp"

namespace dwfs {

// Result of one unwrapping run: the reconstruction plus whatever the method
// can say about how the run went. Methods that cannot fill a field leave it
// at its default.
struct UnwrapReport {
    PhaseGrid phase;
    std::string method;
    int iterations = 0;
    double residual = 0.0;   // solver residual / final objective, method-specific
    double runtime_ms = 0.0;
    bool warning = false;    // e.g. optimizer hit max_iters without converging
    std::string warning_text;
    std::map<std::string, double> diagnostics;
    std::vector<double> objective_history; // nonlinear reconstructor only
    std::vector<double> slope_residual_x;  // SH only, n_sub^2 per-subaperture fit residual
    std::vector<double> slope_residual_y;
};

} // namespace dwfs
