#ifndef CHMKIT_INGEST_HPP
#define CHMKIT_INGEST_HPP

#include "chmkit/geo.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chmkit {

/// One LiDAR return. Classification follows the ASPRS convention when
/// present: 2 ground, 3/4/5 vegetation, 6 building, 9 water.
struct PointRecord {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::optional<std::uint8_t> classification;
};

struct PointCloud {
    std::vector<PointRecord> points;
    Crs crs;
    bool classified = false; // true iff every point carries a classification

    std::size_t size() const { return points.size(); }
    void validate() const;
};

/// Acquisition metadata for one candidate satellite image.
struct ImageMeta {
    std::string id;
    int year = 0;
    int month = 0;
    int day = 0;
    double cloud_cover = 0.0; // fraction in [0,1]
    double sun_elevation = 0.0;
    double view_angle = 0.0;
    Hemisphere hemisphere = Hemisphere::North;
};

// --- Point cloud readers ----------------------------------------------------

/// Minimal LAS reader: version 1.2, point formats 0 and 1, uncompressed.
/// Coordinates decode as stored_int * scale + offset. The classified flag is
/// set when any point carries a nonzero class code.
PointCloud read_las(std::span<const std::uint8_t> bytes, const Crs& crs);

/// Whitespace text: "x y z [class]" per line, '#' comments, blank lines ok.
PointCloud read_point_text(const std::string& text, const Crs& crs);
std::string write_point_text(const PointCloud& pc);

// --- Outlier removal ----------------------------------------------------------

/// Statistical outlier removal over 3D k-nearest-neighbor mean distances.
/// Points whose mean distance exceeds mean + sigma_mult * stddev (population)
/// of all mean distances are dropped; survivor order is preserved.
PointCloud remove_outliers(const PointCloud& pc, std::size_t k = 8, double sigma_mult = 3.0);

// --- Raster container (.chmr) -------------------------------------------------
//
// Little-endian binary layout: magic "CHMR", version u16 = 1, cols u32,
// rows u32, origin_x f64, origin_y f64, pixel_size f64, crs_kind u8
// (0 geographic, 1 UTM), zone i16, hemisphere u8 (0 N, 1 S), nodata f32,
// then rows*cols f32 values in row-major order.

Raster read_raster(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_raster(const Raster& r);

// --- ESRI ASCII grid -----------------------------------------------------------

Raster read_ascii_grid(const std::string& text, const Crs& crs);
std::string write_ascii_grid(const Raster& r);

// --- PPM (binary P6, maxval 255) ------------------------------------------------
//
// PPM carries no georeferencing; grid placement travels in a 4-line ".geo"
// sidecar: origin_x, origin_y, pixel_size, crs.

RgbImage read_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_ppm(const RgbImage& img);

GridGeometry read_geo_sidecar(const std::string& text, std::size_t cols, std::size_t rows);
std::string write_geo_sidecar(const GridGeometry& g);

// --- File helpers ---------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::string& path, const std::string& text);

/// Loads a raster by extension: .chmr binary container or .asc ESRI ASCII
/// (ASCII grids carry no CRS; callers pass one).
Raster load_raster(const std::string& path, const Crs& ascii_crs = Crs::wgs84());
void store_raster(const std::string& path, const Raster& r);

/// Loads a PPM plus its ".geo" sidecar (same path with extension replaced).
RgbImage load_rgb(const std::string& ppm_path);
void store_rgb(const std::string& ppm_path, const RgbImage& img);

/// Loads a point cloud by extension: .las binary or anything else as text.
PointCloud load_point_cloud(const std::string& path, const Crs& crs);

std::string sidecar_path(const std::string& ppm_path);

} // namespace chmkit

#endif
