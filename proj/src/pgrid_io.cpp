#include "dwfs/pgrid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dwfs/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "PGRID i/o assumes a little-endian host");

namespace dwfs {

namespace {
constexpr char kMagic[16] = {'P', 'G', 'R', 'I', 'D', 'v', '1', '\n',
                             0, 0, 0, 0, 0, 0, 0, 0};
constexpr std::uint32_t kFlagMask = 1u;
} // namespace

void save_pgrid(const std::string& path, const PhaseGrid& g, bool with_mask) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f.write(kMagic, sizeof kMagic);
    const std::uint32_t n = std::uint32_t(g.n);
    const std::uint32_t flags = with_mask ? kFlagMask : 0u;
    f.write(reinterpret_cast<const char*>(&n), 4);
    f.write(reinterpret_cast<const char*>(&flags), 4);
    f.write(reinterpret_cast<const char*>(g.values.data()),
            std::streamsize(g.values.size() * sizeof(double)));
    if (with_mask)
        f.write(reinterpret_cast<const char*>(g.mask.data()), std::streamsize(g.mask.size()));
    if (!f) throw io_error("short write: " + path);
}

PhaseGrid load_pgrid(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open: " + path);
    char magic[16];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw io_error("not a PGRID v1 file: " + path);
    std::uint32_t n = 0, flags = 0;
    f.read(reinterpret_cast<char*>(&n), 4);
    f.read(reinterpret_cast<char*>(&flags), 4);
    if (!f || n < 4 || n % 2 != 0 || n > (1u << 16))
        throw io_error("bad PGRID header in " + path);
    PhaseGrid g(static_cast<int>(n));
    f.read(reinterpret_cast<char*>(g.values.data()),
           std::streamsize(g.values.size() * sizeof(double)));
    if (flags & kFlagMask)
        f.read(reinterpret_cast<char*>(g.mask.data()), std::streamsize(g.mask.size()));
    if (!f) throw io_error("truncated PGRID file: " + path);
    return g;
}

} // namespace dwfs
