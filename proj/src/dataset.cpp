#include "chmkit/dataset.hpp"

#include "chmkit/error.hpp"
#include "chmkit/ingest.hpp"
#include "chmkit/util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace chmkit {

namespace {

struct Date {
    int year, month, day;

    bool operator<(const Date& o) const
    {
        if (year != o.year) return year < o.year;
        if (month != o.month) return month < o.month;
        return day < o.day;
    }
    bool operator<=(const Date& o) const { return !(o < *this); }
};

// Hemisphere summer windows: Jun 1 - Aug 30 (north); Dec 1 of the target
// year through Feb 28 of the following year (south). The end days are
// applied verbatim, leap years included.
bool in_summer_window(const ImageMeta& m, int year)
{
    const Date d{m.year, m.month, m.day};
    if (m.hemisphere == Hemisphere::North)
        return Date{year, 6, 1} <= d && d <= Date{year, 8, 30};
    return (Date{year, 12, 1} <= d && d <= Date{year, 12, 31})
        || (Date{year + 1, 1, 1} <= d && d <= Date{year + 1, 2, 28});
}

bool passes_strict(const ImageMeta& m, const SelectionCriteria& c)
{
    return m.cloud_cover == c.strict_cloud_cover_max
        && m.sun_elevation > c.strict_sun_elevation_min
        && m.view_angle < c.strict_view_angle_max;
}

bool passes_relaxed(const ImageMeta& m, const SelectionCriteria& c)
{
    return m.cloud_cover < c.relaxed_cloud_cover_max
        && m.sun_elevation > c.relaxed_sun_elevation_min
        && m.view_angle < c.relaxed_view_angle_max;
}

// Strict total order so the choice is independent of candidate order.
bool better(const ImageMeta& a, const ImageMeta& b)
{
    if (a.view_angle != b.view_angle)
        return a.view_angle < b.view_angle;
    const Date da{a.year, a.month, a.day}, db{b.year, b.month, b.day};
    if (da < db)
        return true;
    if (db < da)
        return false;
    return a.id < b.id;
}

} // namespace

std::optional<ImageMeta> select_image(const std::vector<ImageMeta>& candidates,
                                      const SelectionCriteria& criteria)
{
    std::optional<ImageMeta> best_strict, best_relaxed;
    for (const auto& m : candidates) {
        if (!in_summer_window(m, criteria.year))
            continue;
        if (passes_strict(m, criteria) && (!best_strict || better(m, *best_strict)))
            best_strict = m;
        if (passes_relaxed(m, criteria) && (!best_relaxed || better(m, *best_relaxed)))
            best_relaxed = m;
    }
    if (best_strict)
        return best_strict;
    return best_relaxed;
}

std::vector<ImageMeta> read_image_meta_table(const std::string& text)
{
    std::vector<ImageMeta> out;
    std::istringstream stream(text);
    std::string line;
    long long line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos)
                break;
            start = tab + 1;
        }
        if (fields.size() != 6)
            throw ParseError("image metadata rows need 6 tab-separated fields, got "
                                 + std::to_string(fields.size()),
                             line_no, true);
        ImageMeta m;
        m.id = fields[0];
        if (std::sscanf(fields[1].c_str(), "%d-%d-%d", &m.year, &m.month, &m.day) != 3)
            throw ParseError("bad ISO date '" + fields[1] + "'", line_no, true);
        try {
            m.cloud_cover = std::stod(fields[2]);
            m.sun_elevation = std::stod(fields[3]);
            m.view_angle = std::stod(fields[4]);
        } catch (const std::logic_error&) {
            throw ParseError("non-numeric image metadata field", line_no, true);
        }
        if (m.cloud_cover < 0.0 || m.cloud_cover > 1.0)
            throw ParseError("cloud_cover must lie in [0, 1]", line_no, true);
        if (fields[5] == "north" || fields[5] == "N")
            m.hemisphere = Hemisphere::North;
        else if (fields[5] == "south" || fields[5] == "S")
            m.hemisphere = Hemisphere::South;
        else
            throw ParseError("hemisphere must be north or south, got '" + fields[5] + "'", line_no, true);
        out.push_back(std::move(m));
    }
    return out;
}

// --- Pseudo-depth ------------------------------------------------------------------

void PseudoDepthConfig::validate() const
{
    if (!(h_max > 0.0))
        throw InputError("pseudo-depth h_max must be positive");
}

PseudoDepthResult to_pseudo_depth(const ChmRaster& chm, const PseudoDepthConfig& cfg)
{
    chm.validate();
    cfg.validate();
    const float h_max = static_cast<float>(cfg.h_max);

    PseudoDepthResult out;
    out.depth = chm;
    for (float& v : out.depth.values) {
        if (v == chm.nodata)
            continue;
        if (v > h_max) {
            ++out.clamped;
            v = h_max;
        }
        v = h_max - v;
    }
    return out;
}

ChmRaster from_pseudo_depth(const Raster& depth, const PseudoDepthConfig& cfg)
{
    depth.validate();
    cfg.validate();
    const float h_max = static_cast<float>(cfg.h_max);

    ChmRaster chm = depth;
    for (float& v : chm.values) {
        if (v == depth.nodata)
            continue;
        if (v < 0.0f || v > h_max)
            throw InputError("pseudo-depth values must lie in [0, " + format_float(h_max) + "]");
        v = h_max - v;
    }
    return chm;
}

// --- Training tiles -------------------------------------------------------------------

TileManifest export_tiles(const RgbImage& rgb, const Raster& label, std::size_t tile_size,
                          double max_nodata_fraction, const std::string& out_dir)
{
    rgb.validate();
    label.validate();
    if (!(rgb.geom == label.geom))
        throw InputError("export_tiles requires RGB and label on the same grid");
    if (tile_size < 1)
        throw InputError("tile size must be at least 1");
    if (max_nodata_fraction < 0.0 || max_nodata_fraction > 1.0)
        throw InputError("max_nodata_fraction must lie in [0, 1]");

    std::filesystem::create_directories(out_dir);

    TileManifest manifest;
    manifest.tile_size = tile_size;
    manifest.max_nodata_fraction = max_nodata_fraction;

    const std::size_t tiles_y = label.geom.rows / tile_size;
    const std::size_t tiles_x = label.geom.cols / tile_size;
    for (std::size_t ty = 0; ty < tiles_y; ++ty) {
        for (std::size_t tx = 0; tx < tiles_x; ++tx) {
            const std::size_t row0 = ty * tile_size;
            const std::size_t col0 = tx * tile_size;

            std::size_t nodata_cells = 0;
            for (std::size_t r = 0; r < tile_size; ++r)
                for (std::size_t c = 0; c < tile_size; ++c)
                    if (label.is_nodata(row0 + r, col0 + c))
                        ++nodata_cells;
            const double total = static_cast<double>(tile_size) * static_cast<double>(tile_size);
            const double nodata_fraction = static_cast<double>(nodata_cells) / total;
            if (nodata_fraction > max_nodata_fraction)
                continue;

            GridGeometry tg;
            tg.origin_x = label.geom.origin_x + static_cast<double>(col0) * label.geom.pixel_size;
            tg.origin_y = label.geom.origin_y - static_cast<double>(row0) * label.geom.pixel_size;
            tg.pixel_size = label.geom.pixel_size;
            tg.cols = tile_size;
            tg.rows = tile_size;
            tg.crs = label.geom.crs;

            RgbImage rgb_tile(tg);
            Raster label_tile(tg, label.nodata, label.nodata);
            for (std::size_t r = 0; r < tile_size; ++r) {
                for (std::size_t c = 0; c < tile_size; ++c) {
                    const std::size_t from = (row0 + r) * label.geom.cols + (col0 + c);
                    const std::size_t to = r * tile_size + c;
                    rgb_tile.r[to] = rgb.r[from];
                    rgb_tile.g[to] = rgb.g[from];
                    rgb_tile.b[to] = rgb.b[from];
                    label_tile.values[to] = label.values[from];
                }
            }

            TileEntry entry;
            entry.tile_id = "r" + std::to_string(ty) + "_c" + std::to_string(tx);
            const auto base = std::filesystem::path(out_dir) / ("tile_" + entry.tile_id);
            entry.rgb_path = base.string() + ".ppm";
            entry.label_path = base.string() + ".chmr";
            entry.origin_x = tg.origin_x;
            entry.origin_y = tg.origin_y;
            entry.valid_fraction = 1.0 - nodata_fraction;

            store_rgb(entry.rgb_path, rgb_tile);
            write_file_bytes(entry.label_path, write_raster(label_tile));
            manifest.entries.push_back(std::move(entry));
        }
    }

    write_file_text((std::filesystem::path(out_dir) / "tiles.tsv").string(),
                    manifest_to_text(manifest));
    return manifest;
}

std::string manifest_to_text(const TileManifest& manifest)
{
    std::string out = "# tile_id\trgb_path\tlabel_path\torigin_x\torigin_y\tvalid_fraction\n";
    for (const auto& e : manifest.entries) {
        out += e.tile_id;
        out += '\t';
        out += e.rgb_path;
        out += '\t';
        out += e.label_path;
        out += '\t';
        out += format_double(e.origin_x);
        out += '\t';
        out += format_double(e.origin_y);
        out += '\t';
        out += format_double(e.valid_fraction);
        out += '\n';
    }
    return out;
}

} // namespace chmkit
