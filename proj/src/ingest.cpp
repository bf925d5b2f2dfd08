#include "chmkit/ingest.hpp"

#include "chmkit/error.hpp"
#include "chmkit/util.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace chmkit {

void PointCloud::validate() const
{
    if (points.empty())
        throw InputError("point cloud is empty");
    for (const auto& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw InputError("point cloud holds a non-finite coordinate");
        if (classified && !p.classification)
            throw InputError("classified point cloud holds an unclassified point");
    }
}

// --- Little-endian decoding ---------------------------------------------------

namespace {

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t size() const { return bytes_.size(); }

    void require(std::size_t offset, std::size_t n, const char* what) const
    {
        if (offset + n > bytes_.size())
            throw ParseError(std::string(what) + " extends past end of file",
                             static_cast<long long>(bytes_.size()));
    }

    std::uint8_t u8(std::size_t off) const { return bytes_[off]; }

    std::uint16_t u16(std::size_t off) const
    {
        return static_cast<std::uint16_t>(bytes_[off] | (bytes_[off + 1] << 8));
    }

    std::uint32_t u32(std::size_t off) const
    {
        return static_cast<std::uint32_t>(bytes_[off]) | (static_cast<std::uint32_t>(bytes_[off + 1]) << 8)
             | (static_cast<std::uint32_t>(bytes_[off + 2]) << 16)
             | (static_cast<std::uint32_t>(bytes_[off + 3]) << 24);
    }

    std::int32_t i32(std::size_t off) const { return static_cast<std::int32_t>(u32(off)); }
    std::int16_t i16(std::size_t off) const { return static_cast<std::int16_t>(u16(off)); }

    float f32(std::size_t off) const { return std::bit_cast<float>(u32(off)); }

    double f64(std::size_t off) const
    {
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i)
            v = (v << 8) | bytes_[off + static_cast<std::size_t>(i)];
        return std::bit_cast<double>(v);
    }

private:
    std::span<const std::uint8_t> bytes_;
};

class ByteWriter {
public:
    std::vector<std::uint8_t> take() { return std::move(out_); }

    void u8(std::uint8_t v) { out_.push_back(v); }

    void u16(std::uint16_t v)
    {
        out_.push_back(static_cast<std::uint8_t>(v));
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
    }

    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void f64(double v)
    {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i)
            out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }

    void raw(const char* data, std::size_t n)
    {
        out_.insert(out_.end(), data, data + n);
    }

private:
    std::vector<std::uint8_t> out_;
};

} // namespace

// --- LAS ------------------------------------------------------------------------

namespace {

// LAS 1.2 public header field offsets.
constexpr std::size_t kLasVersionMajor = 24;
constexpr std::size_t kLasVersionMinor = 25;
constexpr std::size_t kLasHeaderSize = 94;
constexpr std::size_t kLasPointOffset = 96;
constexpr std::size_t kLasPointFormat = 104;
constexpr std::size_t kLasRecordLength = 105;
constexpr std::size_t kLasPointCount = 107;
constexpr std::size_t kLasScaleX = 131;
constexpr std::size_t kLasOffsetX = 155;
constexpr std::size_t kLasMinHeader = 227;

} // namespace

PointCloud read_las(std::span<const std::uint8_t> bytes, const Crs& crs)
{
    ByteReader in(bytes);
    in.require(0, 4, "LAS magic");
    if (std::memcmp(bytes.data(), "LASF", 4) != 0)
        throw ParseError("bad LAS magic (expected \"LASF\")", 0);

    in.require(0, kLasMinHeader, "LAS header");
    const unsigned major = in.u8(kLasVersionMajor);
    const unsigned minor = in.u8(kLasVersionMinor);
    if (major != 1 || minor > 2)
        throw ParseError("unsupported LAS version " + std::to_string(major) + "." + std::to_string(minor),
                         kLasVersionMajor);

    const std::uint16_t header_size = in.u16(kLasHeaderSize);
    if (header_size < kLasMinHeader)
        throw ParseError("LAS header size too small", kLasHeaderSize);

    const std::uint32_t point_offset = in.u32(kLasPointOffset);
    if (point_offset < header_size)
        throw ParseError("LAS point data offset precedes header end", kLasPointOffset);

    const std::uint8_t format = in.u8(kLasPointFormat);
    if (format & 0x80)
        throw ParseError("compressed LAS (LAZ) is not supported", kLasPointFormat);
    if (format != 0 && format != 1)
        throw ParseError("unsupported LAS point format " + std::to_string(format), kLasPointFormat);

    const std::uint16_t record_len = in.u16(kLasRecordLength);
    const std::uint16_t min_len = format == 0 ? 20 : 28;
    if (record_len < min_len)
        throw ParseError("LAS point record length " + std::to_string(record_len) + " too short for format "
                             + std::to_string(format),
                         kLasRecordLength);

    const std::uint32_t count = in.u32(kLasPointCount);
    if (count == 0)
        throw ParseError("LAS file declares zero points", kLasPointCount);

    const std::size_t need = static_cast<std::size_t>(point_offset)
                           + static_cast<std::size_t>(count) * record_len;
    if (bytes.size() < need)
        throw ParseError("LAS point data truncated: header declares " + std::to_string(count)
                             + " records of " + std::to_string(record_len) + " bytes",
                         static_cast<long long>(bytes.size()));

    const double scale_x = in.f64(kLasScaleX);
    const double scale_y = in.f64(kLasScaleX + 8);
    const double scale_z = in.f64(kLasScaleX + 16);
    const double off_x = in.f64(kLasOffsetX);
    const double off_y = in.f64(kLasOffsetX + 8);
    const double off_z = in.f64(kLasOffsetX + 16);

    PointCloud pc;
    pc.crs = crs;
    pc.points.reserve(count);
    bool any_classified = false;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t base = point_offset + static_cast<std::size_t>(i) * record_len;
        PointRecord p;
        p.x = in.i32(base + 0) * scale_x + off_x;
        p.y = in.i32(base + 4) * scale_y + off_y;
        p.z = in.i32(base + 8) * scale_z + off_z;
        const std::uint8_t cls = in.u8(base + 15) & 0x1F;
        p.classification = cls;
        any_classified |= cls != 0;
        pc.points.push_back(p);
    }
    pc.classified = any_classified;
    if (!any_classified)
        for (auto& p : pc.points)
            p.classification.reset();
    pc.validate();
    return pc;
}

// --- Point text -------------------------------------------------------------------

PointCloud read_point_text(const std::string& text, const Crs& crs)
{
    PointCloud pc;
    pc.crs = crs;
    std::istringstream stream(text);
    std::string line;
    long long line_no = 0;
    bool all_have_class = true;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        std::istringstream fields(line);
        std::vector<std::string> toks;
        std::string tok;
        while (fields >> tok)
            toks.push_back(tok);
        if (toks.empty())
            continue;
        if (toks.size() != 3 && toks.size() != 4)
            throw ParseError("expected \"x y z [class]\", got " + std::to_string(toks.size()) + " fields",
                             line_no, true);
        PointRecord p;
        try {
            std::size_t used = 0;
            p.x = std::stod(toks[0], &used);
            if (used != toks[0].size()) throw std::invalid_argument(toks[0]);
            p.y = std::stod(toks[1], &used);
            if (used != toks[1].size()) throw std::invalid_argument(toks[1]);
            p.z = std::stod(toks[2], &used);
            if (used != toks[2].size()) throw std::invalid_argument(toks[2]);
            if (toks.size() == 4) {
                const long cls = std::stol(toks[3], &used);
                if (used != toks[3].size() || cls < 0 || cls > 255)
                    throw std::invalid_argument(toks[3]);
                p.classification = static_cast<std::uint8_t>(cls);
            } else {
                all_have_class = false;
            }
        } catch (const std::logic_error&) {
            throw ParseError("non-numeric field in point record", line_no, true);
        }
        pc.points.push_back(p);
    }
    if (pc.points.empty())
        throw InputError("point text holds no data lines");
    pc.classified = all_have_class;
    if (!pc.classified)
        for (auto& p : pc.points)
            p.classification.reset();
    pc.validate();
    return pc;
}

std::string write_point_text(const PointCloud& pc)
{
    std::string out;
    out.reserve(pc.points.size() * 32);
    for (const auto& p : pc.points) {
        out += format_double(p.x);
        out += ' ';
        out += format_double(p.y);
        out += ' ';
        out += format_double(p.z);
        if (pc.classified) {
            out += ' ';
            out += std::to_string(static_cast<int>(*p.classification));
        }
        out += '\n';
    }
    return out;
}

// --- Outlier removal ----------------------------------------------------------------

namespace {

// Uniform hash grid over 3D points; shells of cells are scanned outward until
// the k nearest neighbors cannot improve. A cell at Chebyshev shell r is at
// least (r-1)*cell away from the query point, which bounds the search.
class KnnGrid {
public:
    KnnGrid(const std::vector<PointRecord>& pts, std::size_t k) : pts_(pts)
    {
        double min[3] = {pts[0].x, pts[0].y, pts[0].z};
        double max[3] = {pts[0].x, pts[0].y, pts[0].z};
        for (const auto& p : pts) {
            const double c[3] = {p.x, p.y, p.z};
            for (int d = 0; d < 3; ++d) {
                min[d] = std::min(min[d], c[d]);
                max[d] = std::max(max[d], c[d]);
            }
        }
        const double span = std::max({max[0] - min[0], max[1] - min[1], max[2] - min[2], 1e-9});
        const double per_axis = std::cbrt(static_cast<double>(pts.size()) / std::max<std::size_t>(k, 1));
        cell_ = std::max(span / std::max(per_axis, 1.0), 1e-9);
        for (int d = 0; d < 3; ++d) {
            origin_[d] = min[d];
            hi_[d] = static_cast<long long>(std::floor((max[d] - min[d]) / cell_));
        }
        max_ring_ = std::max({hi_[0], hi_[1], hi_[2]}) + 1;
        for (std::size_t i = 0; i < pts.size(); ++i)
            cells_[key_of(pts[i])].push_back(i);
    }

    // Mean Euclidean distance from pts_[idx] to its k nearest other points.
    double mean_knn_distance(std::size_t idx, std::size_t k) const
    {
        const auto& q = pts_[idx];
        std::priority_queue<double> best; // max-heap of the k smallest squared distances
        long long qc[3];
        cell_coords(q, qc);
        for (long long ring = 0; ring <= max_ring_ + std::max({std::llabs(qc[0]), std::llabs(qc[1]),
                                                               std::llabs(qc[2])}); ++ring) {
            if (best.size() == k && ring > 0) {
                const double reach = static_cast<double>(ring - 1) * cell_;
                if (reach * reach > best.top())
                    break;
            }
            // Shell clipped to the occupied cell box keeps far rings cheap.
            long long lo[3], up[3];
            for (int d = 0; d < 3; ++d) {
                lo[d] = std::max(qc[d] - ring, 0ll);
                up[d] = std::min(qc[d] + ring, hi_[d]);
            }
            for (long long cx = lo[0]; cx <= up[0]; ++cx) {
                for (long long cy = lo[1]; cy <= up[1]; ++cy) {
                    for (long long cz = lo[2]; cz <= up[2]; ++cz) {
                        if (std::max({std::llabs(cx - qc[0]), std::llabs(cy - qc[1]),
                                      std::llabs(cz - qc[2])}) != ring)
                            continue;
                        const auto it = cells_.find(pack(cx, cy, cz));
                        if (it == cells_.end())
                            continue;
                        for (std::size_t j : it->second) {
                            if (j == idx)
                                continue;
                            const double ddx = pts_[j].x - q.x;
                            const double ddy = pts_[j].y - q.y;
                            const double ddz = pts_[j].z - q.z;
                            const double d2 = ddx * ddx + ddy * ddy + ddz * ddz;
                            if (best.size() < k)
                                best.push(d2);
                            else if (d2 < best.top()) {
                                best.pop();
                                best.push(d2);
                            }
                        }
                    }
                }
            }
        }
        std::vector<double> d2s;
        d2s.reserve(best.size());
        while (!best.empty()) {
            d2s.push_back(best.top());
            best.pop();
        }
        // Ascending order keeps the summation order deterministic.
        std::sort(d2s.begin(), d2s.end());
        double sum = 0.0;
        for (double d2 : d2s)
            sum += std::sqrt(d2);
        return sum / static_cast<double>(d2s.size());
    }

private:
    void cell_coords(const PointRecord& p, long long out[3]) const
    {
        out[0] = static_cast<long long>(std::floor((p.x - origin_[0]) / cell_));
        out[1] = static_cast<long long>(std::floor((p.y - origin_[1]) / cell_));
        out[2] = static_cast<long long>(std::floor((p.z - origin_[2]) / cell_));
    }

    std::uint64_t key_of(const PointRecord& p) const
    {
        long long c[3];
        cell_coords(p, c);
        return pack(c[0], c[1], c[2]);
    }

    static std::uint64_t pack(long long x, long long y, long long z)
    {
        std::uint64_t v = static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ull;
        v ^= static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4full;
        v ^= static_cast<std::uint64_t>(z) * 0x165667b19e3779f9ull;
        return v;
    }

    const std::vector<PointRecord>& pts_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
    double origin_[3] = {0, 0, 0};
    long long hi_[3] = {0, 0, 0};
    double cell_ = 1.0;
    long long max_ring_ = 0;
};

} // namespace

PointCloud remove_outliers(const PointCloud& pc, std::size_t k, double sigma_mult)
{
    pc.validate();
    if (k < 1)
        throw InputError("outlier removal requires k >= 1");
    if (!(sigma_mult > 0.0))
        throw InputError("outlier removal requires a positive sigma multiplier");
    if (pc.points.size() < k + 1)
        throw InputError("outlier removal needs at least k+1 points (k=" + std::to_string(k) + ", have "
                         + std::to_string(pc.points.size()) + ")");

    KnnGrid grid(pc.points, k);
    const std::size_t n = pc.points.size();
    std::vector<double> mean_dist(n, 0.0);
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            mean_dist[i] = grid.mean_knn_distance(i, k);
    });

    double mean = 0.0;
    for (double d : mean_dist)
        mean += d;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double d : mean_dist)
        var += (d - mean) * (d - mean);
    var /= static_cast<double>(n);
    const double threshold = mean + sigma_mult * std::sqrt(var);

    PointCloud out;
    out.crs = pc.crs;
    out.classified = pc.classified;
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!(mean_dist[i] > threshold))
            out.points.push_back(pc.points[i]);
    if (out.points.empty())
        throw InputError("outlier removal rejected every point");
    return out;
}

// --- Binary raster container ------------------------------------------------------

Raster read_raster(std::span<const std::uint8_t> bytes)
{
    ByteReader in(bytes);
    in.require(0, 4, "raster magic");
    if (std::memcmp(bytes.data(), "CHMR", 4) != 0)
        throw ParseError("bad raster magic (expected \"CHMR\")", 0);
    in.require(4, 42, "raster header");
    const std::uint16_t version = in.u16(4);
    if (version != 1)
        throw ParseError("unsupported raster container version " + std::to_string(version), 4);

    Raster r;
    r.geom.cols = in.u32(6);
    r.geom.rows = in.u32(10);
    r.geom.origin_x = in.f64(14);
    r.geom.origin_y = in.f64(22);
    r.geom.pixel_size = in.f64(30);
    const std::uint8_t kind = in.u8(38);
    const std::int16_t zone = in.i16(39);
    const std::uint8_t hemi = in.u8(41);
    if (kind > 1)
        throw ParseError("unknown CRS kind " + std::to_string(kind), 38);
    if (hemi > 1)
        throw ParseError("unknown hemisphere code " + std::to_string(hemi), 41);
    r.geom.crs = kind == 0
        ? Crs::wgs84()
        : Crs::utm(zone, hemi == 0 ? Hemisphere::North : Hemisphere::South);
    r.nodata = in.f32(42);

    const std::size_t n = r.geom.rows * r.geom.cols;
    const std::size_t expected = 46 + n * 4;
    if (bytes.size() != expected)
        throw ParseError("raster payload size mismatch: header implies " + std::to_string(expected)
                             + " bytes, file has " + std::to_string(bytes.size()),
                         46);
    r.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.values[i] = in.f32(46 + i * 4);
    r.validate();
    return r;
}

std::vector<std::uint8_t> write_raster(const Raster& r)
{
    r.validate();
    ByteWriter out;
    out.raw("CHMR", 4);
    out.u16(1);
    out.u32(static_cast<std::uint32_t>(r.geom.cols));
    out.u32(static_cast<std::uint32_t>(r.geom.rows));
    out.f64(r.geom.origin_x);
    out.f64(r.geom.origin_y);
    out.f64(r.geom.pixel_size);
    out.u8(r.geom.crs.kind == Crs::Kind::Geographic ? 0 : 1);
    out.i16(static_cast<std::int16_t>(r.geom.crs.kind == Crs::Kind::Utm ? r.geom.crs.zone : 0));
    out.u8(r.geom.crs.hemisphere == Hemisphere::South ? 1 : 0);
    out.f32(r.nodata);
    for (float v : r.values)
        out.f32(v);
    return out.take();
}

// --- ESRI ASCII grid -----------------------------------------------------------------

namespace {

struct TokenScanner {
    std::istringstream stream;
    long long line = 1;

    explicit TokenScanner(const std::string& text) : stream(text) {}

    bool next(std::string& tok)
    {
        tok.clear();
        int c;
        while ((c = stream.get()) != EOF) {
            if (c == '\n')
                ++line;
            if (!std::isspace(c)) {
                tok.push_back(static_cast<char>(c));
                break;
            }
        }
        if (tok.empty())
            return false;
        while ((c = stream.get()) != EOF) {
            if (std::isspace(c)) {
                if (c == '\n')
                    ++line;
                break;
            }
            tok.push_back(static_cast<char>(c));
        }
        return true;
    }

    double number(const char* what)
    {
        std::string tok;
        if (!next(tok))
            throw ParseError(std::string("missing ") + what, line, true);
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size())
                throw std::invalid_argument(tok);
            return v;
        } catch (const std::logic_error&) {
            throw ParseError(std::string("non-numeric ") + what + " '" + tok + "'", line, true);
        }
    }
};

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

Raster read_ascii_grid(const std::string& text, const Crs& crs)
{
    TokenScanner scan(text);
    std::string key;

    auto expect_key = [&](const char* name) {
        if (!scan.next(key) || lower(key) != name)
            throw ParseError(std::string("expected header field '") + name + "'", scan.line, true);
    };

    expect_key("ncols");
    const double ncols = scan.number("ncols");
    expect_key("nrows");
    const double nrows = scan.number("nrows");
    expect_key("xllcorner");
    const double xll = scan.number("xllcorner");
    expect_key("yllcorner");
    const double yll = scan.number("yllcorner");
    expect_key("cellsize");
    const double cellsize = scan.number("cellsize");

    if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows))
        throw ParseError("ncols/nrows must be positive integers", scan.line, true);

    Raster r;
    r.geom.cols = static_cast<std::size_t>(ncols);
    r.geom.rows = static_cast<std::size_t>(nrows);
    r.geom.pixel_size = cellsize;
    r.geom.origin_x = xll;
    r.geom.origin_y = yll + nrows * cellsize;
    r.geom.crs = crs;
    r.nodata = -9999.0f;

    // NODATA_value is optional; when absent the first token is already data.
    std::string tok;
    if (!scan.next(tok))
        throw ParseError("grid has no values", scan.line, true);
    if (lower(tok) == "nodata_value") {
        r.nodata = static_cast<float>(scan.number("NODATA_value"));
        if (!scan.next(tok))
            throw ParseError("grid has no values", scan.line, true);
    }

    const std::size_t n = r.geom.rows * r.geom.cols;
    r.values.reserve(n);
    while (true) {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size())
                throw std::invalid_argument(tok);
            r.values.push_back(static_cast<float>(v));
        } catch (const std::logic_error&) {
            throw ParseError("non-numeric grid value '" + tok + "'", scan.line, true);
        }
        if (!scan.next(tok))
            break;
    }
    if (r.values.size() != n)
        throw ParseError("grid declares " + std::to_string(n) + " cells but holds "
                             + std::to_string(r.values.size()),
                         scan.line, true);
    r.validate();
    return r;
}

std::string write_ascii_grid(const Raster& r)
{
    r.validate();
    std::string out;
    out += "ncols " + std::to_string(r.geom.cols) + "\n";
    out += "nrows " + std::to_string(r.geom.rows) + "\n";
    out += "xllcorner " + format_double(r.geom.origin_x) + "\n";
    out += "yllcorner " + format_double(r.geom.min_y()) + "\n";
    out += "cellsize " + format_double(r.geom.pixel_size) + "\n";
    out += "NODATA_value " + format_float(r.nodata) + "\n";
    for (std::size_t row = 0; row < r.geom.rows; ++row) {
        for (std::size_t col = 0; col < r.geom.cols; ++col) {
            if (col > 0)
                out += ' ';
            out += format_float(r.at(row, col));
        }
        out += '\n';
    }
    return out;
}

// --- PPM ---------------------------------------------------------------------------

namespace {

// PPM header token: skips whitespace and '#' comments.
bool ppm_token(std::span<const std::uint8_t> bytes, std::size_t& pos, std::string& tok)
{
    tok.clear();
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n')
                ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        tok.push_back(static_cast<char>(bytes[pos]));
        ++pos;
    }
    return !tok.empty();
}

} // namespace

RgbImage read_ppm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 0;
    std::string tok;
    if (!ppm_token(bytes, pos, tok) || tok != "P6")
        throw ParseError("not a binary PPM (expected magic \"P6\")", 0);

    auto read_int = [&](const char* what) -> std::size_t {
        if (!ppm_token(bytes, pos, tok))
            throw ParseError(std::string("missing PPM ") + what, static_cast<long long>(pos));
        try {
            std::size_t used = 0;
            const long v = std::stol(tok, &used);
            if (used != tok.size() || v < 0)
                throw std::invalid_argument(tok);
            return static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
            throw ParseError(std::string("bad PPM ") + what + " '" + tok + "'",
                             static_cast<long long>(pos));
        }
    };

    const std::size_t width = read_int("width");
    const std::size_t height = read_int("height");
    const std::size_t maxval = read_int("maxval");
    if (width < 1 || height < 1)
        throw ParseError("PPM dimensions must be positive", static_cast<long long>(pos));
    if (maxval != 255)
        throw ParseError("unsupported PPM maxval " + std::to_string(maxval) + " (must be 255)",
                         static_cast<long long>(pos));
    ++pos; // single whitespace byte separates header from pixel data

    const std::size_t n = width * height;
    if (bytes.size() < pos + n * 3)
        throw ParseError("PPM pixel data truncated", static_cast<long long>(bytes.size()));

    GridGeometry geom;
    geom.cols = width;
    geom.rows = height;
    geom.origin_x = 0.0;
    geom.origin_y = static_cast<double>(height);
    geom.pixel_size = 1.0;

    RgbImage img(geom);
    for (std::size_t i = 0; i < n; ++i) {
        img.r[i] = bytes[pos + i * 3];
        img.g[i] = bytes[pos + i * 3 + 1];
        img.b[i] = bytes[pos + i * 3 + 2];
    }
    return img;
}

std::vector<std::uint8_t> write_ppm(const RgbImage& img)
{
    img.validate();
    const std::string header = "P6\n" + std::to_string(img.geom.cols) + " "
                             + std::to_string(img.geom.rows) + "\n255\n";
    std::vector<std::uint8_t> out;
    out.reserve(header.size() + img.r.size() * 3);
    out.insert(out.end(), header.begin(), header.end());
    for (std::size_t i = 0; i < img.r.size(); ++i) {
        out.push_back(img.r[i]);
        out.push_back(img.g[i]);
        out.push_back(img.b[i]);
    }
    return out;
}

GridGeometry read_geo_sidecar(const std::string& text, std::size_t cols, std::size_t rows)
{
    std::istringstream stream(text);
    std::string lines[4];
    for (int i = 0; i < 4; ++i) {
        if (!std::getline(stream, lines[i]))
            throw ParseError("geo sidecar needs 4 lines (origin_x, origin_y, pixel_size, crs)", i + 1, true);
        while (!lines[i].empty() && (lines[i].back() == '\r' || lines[i].back() == ' '))
            lines[i].pop_back();
    }
    GridGeometry g;
    try {
        g.origin_x = std::stod(lines[0]);
        g.origin_y = std::stod(lines[1]);
        g.pixel_size = std::stod(lines[2]);
    } catch (const std::logic_error&) {
        throw ParseError("non-numeric value in geo sidecar", 1, true);
    }
    g.crs = Crs::parse(lines[3]);
    g.cols = cols;
    g.rows = rows;
    g.validate();
    return g;
}

std::string write_geo_sidecar(const GridGeometry& g)
{
    return format_double(g.origin_x) + "\n" + format_double(g.origin_y) + "\n"
         + format_double(g.pixel_size) + "\n" + g.crs.to_string() + "\n";
}

// --- File helpers ----------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

std::string read_file_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw InputError("short write to file: " + path);
}

void write_file_text(const std::string& path, const std::string& text)
{
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

std::string extension_of(const std::string& path)
{
    return lower(std::filesystem::path(path).extension().string());
}

} // namespace

Raster load_raster(const std::string& path, const Crs& ascii_crs)
{
    const std::string ext = extension_of(path);
    if (ext == ".chmr")
        return read_raster(read_file_bytes(path));
    if (ext == ".asc")
        return read_ascii_grid(read_file_text(path), ascii_crs);
    throw InputError("unknown raster extension '" + ext + "' (expected .chmr or .asc): " + path);
}

void store_raster(const std::string& path, const Raster& r)
{
    const std::string ext = extension_of(path);
    if (ext == ".chmr")
        write_file_bytes(path, write_raster(r));
    else if (ext == ".asc")
        write_file_text(path, write_ascii_grid(r));
    else
        throw InputError("unknown raster extension '" + ext + "' (expected .chmr or .asc): " + path);
}

std::string sidecar_path(const std::string& ppm_path)
{
    std::filesystem::path p(ppm_path);
    p.replace_extension(".geo");
    return p.string();
}

RgbImage load_rgb(const std::string& ppm_path)
{
    RgbImage img = read_ppm(read_file_bytes(ppm_path));
    img.geom = read_geo_sidecar(read_file_text(sidecar_path(ppm_path)), img.geom.cols, img.geom.rows);
    return img;
}

void store_rgb(const std::string& ppm_path, const RgbImage& img)
{
    write_file_bytes(ppm_path, write_ppm(img));
    write_file_text(sidecar_path(ppm_path), write_geo_sidecar(img.geom));
}

PointCloud load_point_cloud(const std::string& path, const Crs& crs)
{
    if (extension_of(path) == ".las")
        return read_las(read_file_bytes(path), crs);
    return read_point_text(read_file_text(path), crs);
}

} // namespace chmkit
