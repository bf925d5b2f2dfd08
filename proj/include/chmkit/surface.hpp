#ifndef CHMKIT_SURFACE_HPP
#define CHMKIT_SURFACE_HPP

#include "chmkit/ingest.hpp"

namespace chmkit {

/// Per-cell statistic used when rasterizing ground points into the DEM.
enum class DemStatistic { Mean, Min };

/// DEM/DSM pair on one grid. After rasterize_surfaces the DEM is gap-free
/// and DSM cells without returns carry the literal value -1.
struct SurfacePair {
    Raster dem;
    Raster dsm;
};

/// Grid whose valid cells are canopy heights in meters, clamped at 0.
using ChmRaster = Raster;

/// Rasterizes ground points (DEM, per-cell mean or min) and canopy points
/// (DSM, per-cell max) onto the grid, spline-fills DEM gaps and marks DSM
/// gaps with -1.
SurfacePair rasterize_surfaces(const PointCloud& ground, const PointCloud& canopy,
                               const GridGeometry& geometry,
                               DemStatistic dem_stat = DemStatistic::Mean);

/// Fills nodata cells. Cells between valid data along their row and/or
/// column take natural-cubic-spline estimates (averaged when both
/// directions apply); cells outside the valid hull copy the nearest valid
/// value. Valid cells pass through bit-identical.
Raster fill_gaps_spline(const Raster& r);

/// CHM = DSM - DEM, clamped below at 0. Cells nodata in either input stay
/// nodata.
ChmRaster derive_chm(const SurfacePair& pair);

/// CHM from independently gridded DSM/DEM products: the finer input is
/// resampled to the coarser grid (max for DSM, mean for DEM) before the
/// subtraction.
ChmRaster chm_from_products(const Raster& dsm, const Raster& dem);

/// Cells where mask = 1 become nodata; everything else passes through.
Raster apply_cloud_mask(const Raster& r, const Raster& mask);

/// Grid at the given pixel size whose cells cover a cloud's bounding box.
GridGeometry grid_covering(const PointCloud& pc, double pixel_size);

} // namespace chmkit

#endif
