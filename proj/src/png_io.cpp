#include "dwfs/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dwfs/errors.hpp"

namespace dwfs {

void write_png_heatmap(const std::string& path, const std::vector<double>& values,
                       int n, const std::vector<std::uint8_t>* mask) {
    if (values.size() != std::size_t(n) * n)
        throw validation_error("png export: values do not match n*n");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
    }
    if (!(lo <= hi)) { lo = 0.0; hi = 0.0; } // empty mask: flat black frame
    const double span = hi > lo ? hi - lo : 1.0;

    std::vector<std::uint8_t> row(static_cast<std::size_t>(n));
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw io_error("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw io_error("png write failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(n), png_uint_32(n), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::size_t idx = std::size_t(i) * n + j;
            if (mask && !(*mask)[idx]) {
                row[j] = 0;
            } else {
                const double t = (values[idx] - lo) / span;
                row[j] = std::uint8_t(std::clamp(t, 0.0, 1.0) * 255.0 + 0.5);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);

    std::ofstream sidecar(path + ".txt", std::ios::trunc);
    if (!sidecar) throw io_error("cannot write sidecar for " + path);
    sidecar << "min=" << lo << "\nmax=" << hi << "\n";
}

} // namespace dwfs
