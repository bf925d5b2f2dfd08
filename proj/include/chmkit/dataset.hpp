#ifndef CHMKIT_DATASET_HPP
#define CHMKIT_DATASET_HPP

#include "chmkit/surface.hpp"

#include <optional>
#include <string>
#include <vector>

namespace chmkit {

/// Image selection rules. Candidates must fall in the hemisphere's summer
/// window of the target year; strict criteria are tried first, relaxed ones
/// only when no image passes strict.
struct SelectionCriteria {
    int year = 0;

    double strict_cloud_cover_max = 0.0; // equality: cloud cover must be 0
    double strict_sun_elevation_min = 50.0;
    double strict_view_angle_max = 5.0;

    double relaxed_cloud_cover_max = 0.10;
    double relaxed_sun_elevation_min = 60.0;
    double relaxed_view_angle_max = 10.0;
};

/// Smallest view angle wins among qualifying candidates; ties break by
/// earliest acquisition date, then lexicographic id. Returns nothing when
/// no candidate qualifies.
std::optional<ImageMeta> select_image(const std::vector<ImageMeta>& candidates,
                                      const SelectionCriteria& criteria);

/// Parses the tab-separated candidate table (columns id, date, cloud_cover,
/// sun_elevation, view_angle, hemisphere; '#' header/comment lines).
std::vector<ImageMeta> read_image_meta_table(const std::string& text);

// --- Pseudo-depth -------------------------------------------------------------

struct PseudoDepthConfig {
    double h_max = 50.0; // meters

    void validate() const;
};

struct PseudoDepthResult {
    Raster depth;
    std::size_t clamped = 0; // CHM cells above h_max mapped to depth 0
};

/// depth = h_max - min(chm, h_max); values land in [0, h_max], nodata
/// propagates, and heights above the ceiling are clamped (counted).
PseudoDepthResult to_pseudo_depth(const ChmRaster& chm, const PseudoDepthConfig& cfg = {});

/// chm = h_max - depth. Rejects depth values outside [0, h_max].
ChmRaster from_pseudo_depth(const Raster& depth, const PseudoDepthConfig& cfg = {});

// --- Training tiles --------------------------------------------------------------

struct TileEntry {
    std::string tile_id;
    std::string rgb_path;
    std::string label_path;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double valid_fraction = 1.0;
};

struct TileManifest {
    std::vector<TileEntry> entries;
    std::size_t tile_size = 512;
    double max_nodata_fraction = 0.1;
};

/// Cuts aligned RGB/label grids into non-overlapping full tiles from the
/// upper-left origin, skipping tiles whose label nodata fraction exceeds the
/// limit. Kept tiles are written as PPM (+ .geo sidecar) and .chmr pairs and
/// listed in a manifest written to out_dir/tiles.tsv.
TileManifest export_tiles(const RgbImage& rgb, const Raster& label, std::size_t tile_size,
                          double max_nodata_fraction, const std::string& out_dir);

std::string manifest_to_text(const TileManifest& manifest);

} // namespace chmkit

#endif
