#ifndef CHMKIT_VEGMASK_HPP
#define CHMKIT_VEGMASK_HPP

#include "chmkit/surface.hpp"

namespace chmkit {

/// Decision thresholds for the index-based vegetation test: a pixel is
/// vegetation when NDI > ndi_min and ExB < exb_max.
struct VegThresholds {
    double ndi_min = 0.0;
    double exb_max = 0.15;

    void validate() const;
};

/// Mask raster restricted to {1 vegetation, 0 non-vegetation, nodata}.
using VegMaskRaster = Raster;

/// Normalized green-red difference, (G - R) / (G + R); 0 where G + R = 0.
Raster compute_ndi(const RgbImage& img);

/// Excess blue on chromatic coordinates: 1.4*b - g with r+g+b = 1 per pixel
/// (all thirds when the pixel is black).
Raster compute_exb(const RgbImage& img);

VegMaskRaster classify_vegetation(const RgbImage& img, const VegThresholds& t = {});

/// Zeroes canopy heights over non-vegetation cells (mask = 0); vegetation
/// and nodata cells pass through.
ChmRaster remove_structures(const ChmRaster& chm, const VegMaskRaster& mask);

/// Regrids a {0,1} mask onto a target geometry by majority vote over source
/// cell centers; ties count as vegetation, empty cells become nodata.
VegMaskRaster resample_mask_majority(const VegMaskRaster& mask, const GridGeometry& target);

} // namespace chmkit

#endif
