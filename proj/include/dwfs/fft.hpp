#pragma once

#include <vector>

#include "dwfs/grid.hpp"

namespace dwfs {

// Centered unitary 2-D DFT pair. Zero frequency sits at index (n/2, n/2) in
// both domains, the scale is 1/n each way, so Parseval holds and
// idft2_centered(dft2_centered(f)) == f to roundoff.
//
// Plans are cached per thread; calls are safe from multiple threads.
ComplexField dft2_centered(const ComplexField& f);
ComplexField idft2_centered(const ComplexField& g);

// Type-II (forward) / type-III (inverse) 2-D DCT pair used by the Poisson
// solver. inverse(forward(x)) == x to roundoff.
std::vector<double> dct2_forward(const std::vector<double>& a, int n);
std::vector<double> dct2_inverse(const std::vector<double>& a, int n);

} // namespace dwfs
