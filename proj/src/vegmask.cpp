#include "chmkit/vegmask.hpp"

#include "chmkit/error.hpp"

#include <cmath>

namespace chmkit {

void VegThresholds::validate() const
{
    if (ndi_min < -1.0 || ndi_min > 1.0)
        throw InputError("ndi_min must lie in [-1, 1]");
    if (!std::isfinite(exb_max))
        throw InputError("exb_max must be finite");
}

Raster compute_ndi(const RgbImage& img)
{
    img.validate();
    Raster out(img.geom, -9999.0f, 0.0f);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double red = img.r[i];
        const double green = img.g[i];
        const double sum = green + red;
        out.values[i] = sum == 0.0 ? 0.0f : static_cast<float>((green - red) / sum);
    }
    return out;
}

Raster compute_exb(const RgbImage& img)
{
    img.validate();
    Raster out(img.geom, -9999.0f, 0.0f);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double sum = static_cast<double>(img.r[i]) + img.g[i] + img.b[i];
        const double g = sum == 0.0 ? 1.0 / 3.0 : img.g[i] / sum;
        const double b = sum == 0.0 ? 1.0 / 3.0 : img.b[i] / sum;
        out.values[i] = static_cast<float>(1.4 * b - g);
    }
    return out;
}

VegMaskRaster classify_vegetation(const RgbImage& img, const VegThresholds& t)
{
    t.validate();
    const Raster ndi = compute_ndi(img);
    const Raster exb = compute_exb(img);
    VegMaskRaster mask(img.geom, -9999.0f, 0.0f);
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
        const bool veg = ndi.values[i] > static_cast<float>(t.ndi_min)
                      && exb.values[i] < static_cast<float>(t.exb_max);
        mask.values[i] = veg ? 1.0f : 0.0f;
    }
    return mask;
}

ChmRaster remove_structures(const ChmRaster& chm, const VegMaskRaster& mask)
{
    chm.validate();
    mask.validate();
    if (!(chm.geom == mask.geom))
        throw InputError("remove_structures requires the mask on the CHM grid");

    ChmRaster out = chm;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const float m = mask.values[i];
        if (m == mask.nodata)
            continue;
        if (m == 0.0f) {
            if (out.values[i] != out.nodata && out.values[i] > 0.0f)
                out.values[i] = 0.0f;
        } else if (m != 1.0f) {
            throw InputError("vegetation mask may only hold 0, 1 or nodata");
        }
    }
    return out;
}

VegMaskRaster resample_mask_majority(const VegMaskRaster& mask, const GridGeometry& target)
{
    mask.validate();
    target.validate();
    if (!(mask.geom.crs == target.crs))
        throw InputError("mask resampling requires matching CRS");

    std::vector<std::size_t> ones(target.rows * target.cols, 0);
    std::vector<std::size_t> total(target.rows * target.cols, 0);
    for (std::size_t r = 0; r < mask.geom.rows; ++r) {
        const double cy = mask.geom.center_y(r);
        for (std::size_t c = 0; c < mask.geom.cols; ++c) {
            const float v = mask.at(r, c);
            if (v == mask.nodata)
                continue;
            if (v != 0.0f && v != 1.0f)
                throw InputError("vegetation mask may only hold 0, 1 or nodata");
            const double cx = mask.geom.center_x(c);
            const double fc = std::floor((cx - target.origin_x) / target.pixel_size);
            const double fr = std::floor((target.origin_y - cy) / target.pixel_size);
            if (fc < 0.0 || fr < 0.0 || fc >= static_cast<double>(target.cols)
                || fr >= static_cast<double>(target.rows))
                continue;
            const std::size_t i = static_cast<std::size_t>(fr) * target.cols
                                + static_cast<std::size_t>(fc);
            ++total[i];
            if (v == 1.0f)
                ++ones[i];
        }
    }

    VegMaskRaster out(target, mask.nodata, mask.nodata);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        if (total[i] > 0)
            out.values[i] = 2 * ones[i] >= total[i] ? 1.0f : 0.0f;
    return out;
}

} // namespace chmkit
