#ifndef CHMKIT_GEO_HPP
#define CHMKIT_GEO_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace chmkit {

enum class Hemisphere : std::uint8_t { North = 0, South = 1 };

/// Coordinate reference system. Only two kinds exist in this toolkit:
/// geographic WGS84 (degrees) and UTM on the WGS84 ellipsoid (meters).
struct Crs {
    enum class Kind : std::uint8_t { Geographic = 0, Utm = 1 };

    Kind kind = Kind::Geographic;
    int zone = 0;                              // 1..60, UTM only
    Hemisphere hemisphere = Hemisphere::North; // UTM only

    static Crs wgs84() { return Crs{}; }
    static Crs utm(int zone, Hemisphere h);

    bool operator==(const Crs&) const = default;

    std::string to_string() const;
    static Crs parse(const std::string& text);
};

/// North-up rectilinear grid placement. origin is the upper-left corner of
/// the upper-left cell; row index grows southward.
struct GridGeometry {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size = 1.0; // > 0, map units per pixel
    std::size_t cols = 1;
    std::size_t rows = 1;
    Crs crs;

    bool operator==(const GridGeometry&) const = default;

    double center_x(std::size_t col) const { return origin_x + (static_cast<double>(col) + 0.5) * pixel_size; }
    double center_y(std::size_t row) const { return origin_y - (static_cast<double>(row) + 0.5) * pixel_size; }
    double min_x() const { return origin_x; }
    double max_x() const { return origin_x + static_cast<double>(cols) * pixel_size; }
    double max_y() const { return origin_y; }
    double min_y() const { return origin_y - static_cast<double>(rows) * pixel_size; }
    std::size_t size() const { return rows * cols; }

    void validate() const; // throws InputError on violated invariants
};

/// Single-band float32 grid with a nodata sentinel. Serves as DEM, DSM, CHM,
/// pseudo-depth, land cover, or mask depending on context.
struct Raster {
    GridGeometry geom;
    float nodata = -9999.0f;
    std::vector<float> values;

    Raster() = default;
    Raster(GridGeometry g, float nodata_value, float fill);

    float at(std::size_t row, std::size_t col) const { return values[row * geom.cols + col]; }
    float& at(std::size_t row, std::size_t col) { return values[row * geom.cols + col]; }
    bool is_nodata(std::size_t row, std::size_t col) const { return at(row, col) == nodata; }
    bool is_valid(std::size_t row, std::size_t col) const { return at(row, col) != nodata; }
    std::size_t count_valid() const;

    void validate() const;
};

/// 3x8-bit georeferenced image, channels stored as separate planes.
struct RgbImage {
    GridGeometry geom;
    std::vector<std::uint8_t> r, g, b;

    RgbImage() = default;
    explicit RgbImage(GridGeometry g);

    std::size_t index(std::size_t row, std::size_t col) const { return row * geom.cols + col; }

    void validate() const;
};

// --- UTM / transverse Mercator -------------------------------------------
//
// WGS84 transverse Mercator, sixth-order Krueger series in the third
// flattening. Scale 0.9996, false easting 500 000 m, false northing
// 10 000 000 m on the southern hemisphere.

struct UtmCoord {
    double easting;
    double northing;
};

struct LatLon {
    double lat;
    double lon;
};

UtmCoord utm_forward(double lat_deg, double lon_deg, int zone, Hemisphere hemisphere);
LatLon utm_inverse(double easting, double northing, int zone, Hemisphere hemisphere);

/// UTM zone containing a longitude (normalized into [-180, 180)).
int utm_zone_from_lon(double lon_deg);

/// Central meridian of a UTM zone, degrees.
double utm_central_meridian(int zone);

// --- Resampling ------------------------------------------------------------

/// Grid at the requested pixel size covering src's extent, with the origin
/// snapped to multiples of the pixel size.
GridGeometry coarsened_grid(const GridGeometry& src, double pixel_size);

/// Coarsens src onto target by maximum aggregation: each target cell takes
/// the max over source cell centers falling inside it (nodata sources
/// skipped); cells receiving no centers become nodata.
Raster resample_max(const Raster& src, const GridGeometry& target);

/// Same center-in-cell gathering with the mean instead of the max.
Raster resample_mean(const Raster& src, const GridGeometry& target);

/// Reprojects a raster to UTM at the given pixel size. The zone comes from
/// the source center longitude. Cells gather the max over projected source
/// centers; empty cells fall back to nearest-neighbor sampling at the
/// inverse-projected cell center.
Raster reproject_to_utm(const Raster& src, double pixel_size);

/// RGB variant; nearest neighbor throughout, out-of-source cells black.
RgbImage reproject_to_utm(const RgbImage& src, double pixel_size);

} // namespace chmkit

#endif
