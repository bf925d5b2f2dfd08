#include "chmkit/surface.hpp"

#include "chmkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chmkit {

namespace {

bool locate(const GridGeometry& g, double x, double y, std::size_t& row, std::size_t& col)
{
    const double fc = std::floor((x - g.origin_x) / g.pixel_size);
    const double fr = std::floor((g.origin_y - y) / g.pixel_size);
    if (fc < 0.0 || fr < 0.0 || fc >= static_cast<double>(g.cols) || fr >= static_cast<double>(g.rows))
        return false;
    row = static_cast<std::size_t>(fr);
    col = static_cast<std::size_t>(fc);
    return true;
}

void require_aligned(const GridGeometry& a, const GridGeometry& b, const char* what)
{
    if (!(a == b))
        throw InputError(std::string(what) + " requires identical grid geometries");
}

// Natural cubic spline through strictly increasing knots; second derivatives
// from the classic tridiagonal system (Thomas algorithm), zero curvature at
// the ends. Two knots degrade to linear interpolation.
class NaturalSpline {
public:
    NaturalSpline(std::vector<double> xs, std::vector<double> ys)
        : x_(std::move(xs)), y_(std::move(ys)), m_(x_.size(), 0.0)
    {
        const std::size_t n = x_.size();
        if (n < 3)
            return;
        std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        // Forward sweep; the lower entry for row i is h0 = x_[i] - x_[i-1].
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double w = h0 / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
            if (i == 1)
                break;
        }
    }

    double eval(double x) const
    {
        const std::size_t n = x_.size();
        if (n == 2) {
            const double t = (x - x_[0]) / (x_[1] - x_[0]);
            return y_[0] + t * (y_[1] - y_[0]);
        }
        std::size_t i = static_cast<std::size_t>(
            std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
        i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = x - x_[i];
        const double slope = (y_[i + 1] - y_[i]) / h - h / 6.0 * (2.0 * m_[i] + m_[i + 1]);
        return y_[i] + t * slope + t * t * m_[i] / 2.0 + t * t * t * (m_[i + 1] - m_[i]) / (6.0 * h);
    }

private:
    std::vector<double> x_, y_, m_;
};

} // namespace

GridGeometry grid_covering(const PointCloud& pc, double pixel_size)
{
    pc.validate();
    if (!(pixel_size > 0.0))
        throw InputError("grid pixel size must be positive");
    double min_x = pc.points[0].x, max_x = pc.points[0].x;
    double min_y = pc.points[0].y, max_y = pc.points[0].y;
    for (const auto& p : pc.points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    GridGeometry g;
    g.pixel_size = pixel_size;
    g.crs = pc.crs;
    g.origin_x = std::floor(min_x / pixel_size) * pixel_size;
    g.origin_y = std::ceil(max_y / pixel_size) * pixel_size;
    g.cols = static_cast<std::size_t>(std::floor((max_x - g.origin_x) / pixel_size)) + 1;
    g.rows = static_cast<std::size_t>(std::floor((g.origin_y - min_y) / pixel_size)) + 1;
    return g;
}

SurfacePair rasterize_surfaces(const PointCloud& ground, const PointCloud& canopy,
                               const GridGeometry& geometry, DemStatistic dem_stat)
{
    if (ground.points.empty())
        throw InputError("rasterize_surfaces requires a non-empty ground cloud");
    ground.validate();
    geometry.validate();
    if (!(ground.crs == geometry.crs) || (!canopy.points.empty() && !(canopy.crs == geometry.crs)))
        throw InputError("rasterize_surfaces requires clouds and grid in the same CRS");

    const std::size_t n = geometry.size();
    const float kNodata = -9999.0f;

    Raster dem(geometry, kNodata, kNodata);
    {
        std::vector<double> acc(n, 0.0);
        std::vector<std::size_t> count(n, 0);
        for (const auto& p : ground.points) {
            std::size_t r, c;
            if (!locate(geometry, p.x, p.y, r, c))
                throw InputError("ground point falls outside the target grid");
            const std::size_t i = r * geometry.cols + c;
            if (dem_stat == DemStatistic::Mean) {
                acc[i] += p.z;
            } else {
                acc[i] = count[i] == 0 ? p.z : std::min(acc[i], p.z);
            }
            ++count[i];
        }
        for (std::size_t i = 0; i < n; ++i)
            if (count[i] > 0)
                dem.values[i] = static_cast<float>(
                    dem_stat == DemStatistic::Mean ? acc[i] / static_cast<double>(count[i]) : acc[i]);
    }
    dem = fill_gaps_spline(dem);

    Raster dsm(geometry, kNodata, kNodata);
    {
        std::vector<char> seen(n, 0);
        for (const auto& p : canopy.points) {
            std::size_t r, c;
            if (!locate(geometry, p.x, p.y, r, c))
                throw InputError("canopy point falls outside the target grid");
            const std::size_t i = r * geometry.cols + c;
            const float z = static_cast<float>(p.z);
            if (!seen[i] || z > dsm.values[i]) {
                dsm.values[i] = z;
                seen[i] = 1;
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (!seen[i])
                dsm.values[i] = -1.0f; // cells without returns, e.g. open water
    }

    return SurfacePair{std::move(dem), std::move(dsm)};
}

Raster fill_gaps_spline(const Raster& src)
{
    src.validate();
    const std::size_t rows = src.geom.rows, cols = src.geom.cols;
    if (src.count_valid() == 0)
        throw InputError("cannot gap-fill a raster with no valid cells");

    // Per-row / per-column estimates at gap cells, NaN where a direction
    // does not bracket the gap.
    const double kNone = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> row_est(src.values.size(), kNone);
    std::vector<double> col_est(src.values.size(), kNone);

    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> xs, ys;
        for (std::size_t c = 0; c < cols; ++c) {
            if (src.is_valid(r, c)) {
                xs.push_back(static_cast<double>(c));
                ys.push_back(static_cast<double>(src.at(r, c)));
            }
        }
        if (xs.size() < 2)
            continue;
        NaturalSpline spline(xs, ys);
        for (std::size_t c = static_cast<std::size_t>(xs.front()) + 1; c < static_cast<std::size_t>(xs.back()); ++c)
            if (src.is_nodata(r, c))
                row_est[r * cols + c] = spline.eval(static_cast<double>(c));
    }

    for (std::size_t c = 0; c < cols; ++c) {
        std::vector<double> xs, ys;
        for (std::size_t r = 0; r < rows; ++r) {
            if (src.is_valid(r, c)) {
                xs.push_back(static_cast<double>(r));
                ys.push_back(static_cast<double>(src.at(r, c)));
            }
        }
        if (xs.size() < 2)
            continue;
        NaturalSpline spline(xs, ys);
        for (std::size_t r = static_cast<std::size_t>(xs.front()) + 1; r < static_cast<std::size_t>(xs.back()); ++r)
            if (src.is_nodata(r, c))
                col_est[r * cols + c] = spline.eval(static_cast<double>(r));
    }

    // Nearest valid cell for gaps outside the valid hull: expanding Chebyshev
    // rings, exact Euclidean metric, ties broken by row-major source order.
    auto nearest_valid = [&](std::size_t r, std::size_t c) -> float {
        long long best_d2 = std::numeric_limits<long long>::max();
        std::size_t best_idx = 0;
        const long long max_ring = static_cast<long long>(std::max(rows, cols));
        for (long long ring = 1; ring <= max_ring; ++ring) {
            if (best_d2 != std::numeric_limits<long long>::max() && ring * ring > best_d2)
                break;
            const long long r0 = std::max<long long>(0, static_cast<long long>(r) - ring);
            const long long r1 = std::min<long long>(rows - 1, static_cast<long long>(r) + ring);
            const long long c0 = std::max<long long>(0, static_cast<long long>(c) - ring);
            const long long c1 = std::min<long long>(cols - 1, static_cast<long long>(c) + ring);
            for (long long rr = r0; rr <= r1; ++rr) {
                for (long long cc = c0; cc <= c1; ++cc) {
                    const long long dr = rr - static_cast<long long>(r);
                    const long long dc = cc - static_cast<long long>(c);
                    if (std::max(std::llabs(dr), std::llabs(dc)) != ring)
                        continue;
                    if (!src.is_valid(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)))
                        continue;
                    const long long d2 = dr * dr + dc * dc;
                    const std::size_t idx = static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc);
                    if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
                        best_d2 = d2;
                        best_idx = idx;
                    }
                }
            }
        }
        return src.values[best_idx];
    };

    Raster out = src;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (src.is_valid(r, c))
                continue;
            const std::size_t i = r * cols + c;
            const bool have_row = !std::isnan(row_est[i]);
            const bool have_col = !std::isnan(col_est[i]);
            if (have_row && have_col)
                out.values[i] = static_cast<float>((row_est[i] + col_est[i]) / 2.0);
            else if (have_row)
                out.values[i] = static_cast<float>(row_est[i]);
            else if (have_col)
                out.values[i] = static_cast<float>(col_est[i]);
            else
                out.values[i] = nearest_valid(r, c);
        }
    }
    return out;
}

ChmRaster derive_chm(const SurfacePair& pair)
{
    pair.dem.validate();
    pair.dsm.validate();
    require_aligned(pair.dsm.geom, pair.dem.geom, "derive_chm");

    ChmRaster chm(pair.dsm.geom, pair.dsm.nodata, pair.dsm.nodata);
    for (std::size_t i = 0; i < chm.values.size(); ++i) {
        const float s = pair.dsm.values[i];
        const float g = pair.dem.values[i];
        if (s == pair.dsm.nodata || g == pair.dem.nodata)
            continue;
        chm.values[i] = std::max(s - g, 0.0f);
    }
    return chm;
}

ChmRaster chm_from_products(const Raster& dsm, const Raster& dem)
{
    dsm.validate();
    dem.validate();
    if (!(dsm.geom.crs == dem.geom.crs))
        throw InputError("chm_from_products requires DSM and DEM in the same CRS");

    const bool overlap = dsm.geom.min_x() < dem.geom.max_x() && dem.geom.min_x() < dsm.geom.max_x()
                      && dsm.geom.min_y() < dem.geom.max_y() && dem.geom.min_y() < dsm.geom.max_y();
    if (!overlap)
        throw InputError("chm_from_products inputs have disjoint extents");

    if (dsm.geom == dem.geom)
        return derive_chm(SurfacePair{dem, dsm});

    // Resample the finer product onto the coarser grid; on a resolution tie
    // the DEM grid wins and the DSM is regridded by max.
    if (dem.geom.pixel_size < dsm.geom.pixel_size) {
        const Raster dem_on_dsm = resample_mean(dem, dsm.geom);
        return derive_chm(SurfacePair{dem_on_dsm, dsm});
    }
    const Raster dsm_on_dem = resample_max(dsm, dem.geom);
    return derive_chm(SurfacePair{dem, dsm_on_dem});
}

Raster apply_cloud_mask(const Raster& r, const Raster& mask)
{
    r.validate();
    mask.validate();
    require_aligned(r.geom, mask.geom, "apply_cloud_mask");

    Raster out = r;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const float m = mask.values[i];
        if (m == mask.nodata)
            continue;
        if (m == 1.0f)
            out.values[i] = out.nodata;
        else if (m != 0.0f)
            throw InputError("cloud mask may only hold 0, 1 or nodata");
    }
    return out;
}

} // namespace chmkit
