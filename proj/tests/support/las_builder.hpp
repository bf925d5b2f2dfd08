// Standalone LAS 1.2 writer for test fixtures. Builds files byte by byte
// with no code shared with the library's reader.
#ifndef CHMKIT_TESTS_LAS_BUILDER_HPP
#define CHMKIT_TESTS_LAS_BUILDER_HPP

#include <cstdint>
#include <cstring>
#include <vector>

namespace las_builder {

struct LasPoint {
    std::int32_t x, y, z; // raw stored integers
    std::uint8_t classification = 0;
};

struct LasSpec {
    std::uint8_t format = 0; // 0 or 1
    double scale[3] = {0.01, 0.01, 0.01};
    double offset[3] = {0.0, 0.0, 0.0};
    std::vector<LasPoint> points;
};

inline void put_u16(std::vector<std::uint8_t>& out, std::size_t at, std::uint16_t v)
{
    out[at] = static_cast<std::uint8_t>(v & 0xFF);
    out[at + 1] = static_cast<std::uint8_t>(v >> 8);
}

inline void put_u32(std::vector<std::uint8_t>& out, std::size_t at, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out[at + i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

inline void put_f64(std::vector<std::uint8_t>& out, std::size_t at, double v)
{
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i)
        out[at + i] = static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF);
}

inline std::vector<std::uint8_t> build(const LasSpec& spec)
{
    const std::uint16_t header_size = 227;
    const std::uint16_t record_len = spec.format == 0 ? 20 : 28;
    std::vector<std::uint8_t> out(header_size + spec.points.size() * record_len, 0);

    out[0] = 'L';
    out[1] = 'A';
    out[2] = 'S';
    out[3] = 'F';
    out[24] = 1; // version 1.2
    out[25] = 2;
    put_u16(out, 94, header_size);
    put_u32(out, 96, header_size); // points start right after the header
    out[104] = spec.format;
    put_u16(out, 105, record_len);
    put_u32(out, 107, static_cast<std::uint32_t>(spec.points.size()));
    for (int axis = 0; axis < 3; ++axis) {
        put_f64(out, 131 + 8 * axis, spec.scale[axis]);
        put_f64(out, 155 + 8 * axis, spec.offset[axis]);
    }

    std::size_t at = header_size;
    for (const auto& p : spec.points) {
        put_u32(out, at, static_cast<std::uint32_t>(p.x));
        put_u32(out, at + 4, static_cast<std::uint32_t>(p.y));
        put_u32(out, at + 8, static_cast<std::uint32_t>(p.z));
        out[at + 15] = p.classification; // low 5 bits hold the class
        at += record_len;
    }
    return out;
}

} // namespace las_builder

#endif
