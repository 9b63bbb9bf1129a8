#pragma once

#include <string>
#include <vector>

namespace dwfs {

// 8-bit grayscale heatmap, linearly scaled between the frame's min and max
// (in-mask extrema when a mask is given; out-of-mask pixels render black).
// The scale endpoints go to "<path>.txt" so the image stays interpretable.
void write_png_heatmap(const std::string& path, const std::vector<double>& values,
                       int n, const std::vector<std::uint8_t>* mask = nullptr);

} // namespace dwfs
