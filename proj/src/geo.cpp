#include "chmkit/geo.hpp"

#include "chmkit/error.hpp"
#include "chmkit/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chmkit {

Crs Crs::utm(int zone, Hemisphere h)
{
    if (zone < 1 || zone > 60)
        throw InputError("UTM zone must be in 1..60, got " + std::to_string(zone));
    Crs c;
    c.kind = Kind::Utm;
    c.zone = zone;
    c.hemisphere = h;
    return c;
}

std::string Crs::to_string() const
{
    if (kind == Kind::Geographic)
        return "wgs84";
    return "utm:" + std::to_string(zone) + ":" + (hemisphere == Hemisphere::North ? "N" : "S");
}

Crs Crs::parse(const std::string& text)
{
    if (text == "wgs84" || text == "WGS84")
        return wgs84();
    if (text.rfind("utm:", 0) == 0) {
        const auto rest = text.substr(4);
        const auto sep = rest.find(':');
        if (sep != std::string::npos) {
            const std::string zone_s = rest.substr(0, sep);
            const std::string hemi_s = rest.substr(sep + 1);
            try {
                const int zone = std::stoi(zone_s);
                if (hemi_s == "N" || hemi_s == "n")
                    return utm(zone, Hemisphere::North);
                if (hemi_s == "S" || hemi_s == "s")
                    return utm(zone, Hemisphere::South);
            } catch (const std::logic_error&) {
                // fall through to the error below
            }
        }
    }
    throw InputError("unrecognized CRS '" + text + "' (expected wgs84 or utm:<zone>:<N|S>)");
}

void GridGeometry::validate() const
{
    if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
        throw InputError("grid pixel_size must be positive and finite");
    if (cols < 1 || rows < 1)
        throw InputError("grid must have at least one row and one column");
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
        throw InputError("grid origin must be finite");
    if (crs.kind == Crs::Kind::Utm && (crs.zone < 1 || crs.zone > 60))
        throw InputError("UTM zone must be in 1..60");
}

Raster::Raster(GridGeometry g, float nodata_value, float fill)
    : geom(g), nodata(nodata_value), values(g.rows * g.cols, fill)
{
}

std::size_t Raster::count_valid() const
{
    std::size_t n = 0;
    for (float v : values)
        if (v != nodata)
            ++n;
    return n;
}

void Raster::validate() const
{
    geom.validate();
    if (values.size() != geom.rows * geom.cols)
        throw InputError("raster value count does not match geometry");
    if (!std::isfinite(nodata))
        throw InputError("raster nodata sentinel must be finite");
    for (float v : values)
        if (!std::isfinite(v) && v != nodata)
            throw InputError("raster holds a non-finite value");
}

RgbImage::RgbImage(GridGeometry geometry)
    : geom(geometry),
      r(geometry.rows * geometry.cols, 0),
      g(geometry.rows * geometry.cols, 0),
      b(geometry.rows * geometry.cols, 0)
{
}

void RgbImage::validate() const
{
    geom.validate();
    const std::size_t n = geom.rows * geom.cols;
    if (r.size() != n || g.size() != n || b.size() != n)
        throw InputError("RGB channel sizes do not match geometry");
}

// --- Transverse Mercator ----------------------------------------------------

namespace {

constexpr double kWgs84A = 6378137.0;
constexpr double kWgs84F = 1.0 / 298.257223563;
constexpr double kScale = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;
constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRadToDeg = 57.29577951308232;

struct KruegerSeries {
    double n;            // third flattening
    double e;            // first eccentricity
    double radius;       // rectifying radius A
    double alpha[6];     // forward coefficients
    double beta[6];      // inverse coefficients
};

const KruegerSeries& series()
{
    static const KruegerSeries s = [] {
        KruegerSeries k{};
        const double f = kWgs84F;
        const double n = f / (2.0 - f);
        const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
        k.n = n;
        k.e = std::sqrt(f * (2.0 - f));
        k.radius = kWgs84A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
        k.alpha[0] = n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0
                   - 127.0 * n5 / 288.0 + 7891.0 * n6 / 37800.0;
        k.alpha[1] = 13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0
                   + 281.0 * n5 / 630.0 - 1983433.0 * n6 / 1935360.0;
        k.alpha[2] = 61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0
                   + 167603.0 * n6 / 181440.0;
        k.alpha[3] = 49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0;
        k.alpha[4] = 34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0;
        k.alpha[5] = 212378941.0 * n6 / 319334400.0;
        k.beta[0] = n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0
                  - 81.0 * n5 / 512.0 + 96199.0 * n6 / 604800.0;
        k.beta[1] = n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0
                  - 1118711.0 * n6 / 3870720.0;
        k.beta[2] = 17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0
                  + 5569.0 * n6 / 90720.0;
        k.beta[3] = 4397.0 * n4 / 161280.0 - 11.0 * n5 / 504.0 - 830251.0 * n6 / 7257600.0;
        k.beta[4] = 4583.0 * n5 / 161280.0 - 108847.0 * n6 / 3991680.0;
        k.beta[5] = 20648693.0 * n6 / 638668800.0;
        return k;
    }();
    return s;
}

double hyp(double x) { return std::sqrt(1.0 + x * x); }

// tan of the conformal latitude from tan of the geographic latitude
double tau_prime(double tau, double e)
{
    const double sigma = std::sinh(e * std::atanh(e * tau / hyp(tau)));
    return tau * hyp(sigma) - sigma * hyp(tau);
}

// Newton inversion of tau_prime; converges in a few steps to full precision.
double tau_from_tau_prime(double taup, double e)
{
    const double e2m = 1.0 - e * e;
    double tau = taup / e2m;
    const double stol = std::sqrt(std::numeric_limits<double>::epsilon()) / 10.0
                      * std::max(1.0, std::fabs(taup));
    for (int i = 0; i < 7; ++i) {
        const double taupa = tau_prime(tau, e);
        const double dtau = (taup - taupa) * (1.0 + e2m * tau * tau)
                          / (e2m * hyp(tau) * hyp(taupa));
        tau += dtau;
        if (std::fabs(dtau) < stol)
            break;
    }
    return tau;
}

double normalize_lon(double lon)
{
    double l = std::fmod(lon + 180.0, 360.0);
    if (l < 0.0)
        l += 360.0;
    return l - 180.0;
}

void check_zone(int zone)
{
    if (zone < 1 || zone > 60)
        throw InputError("UTM zone must be in 1..60, got " + std::to_string(zone));
}

} // namespace

int utm_zone_from_lon(double lon_deg)
{
    const double lon = normalize_lon(lon_deg);
    int zone = static_cast<int>(std::floor((lon + 180.0) / 6.0)) + 1;
    return std::clamp(zone, 1, 60);
}

double utm_central_meridian(int zone)
{
    return static_cast<double>(zone) * 6.0 - 183.0;
}

UtmCoord utm_forward(double lat_deg, double lon_deg, int zone, Hemisphere hemisphere)
{
    check_zone(zone);
    if (!std::isfinite(lat_deg) || !std::isfinite(lon_deg))
        throw InputError("utm_forward requires finite coordinates");
    if (!(std::fabs(lat_deg) < 84.0))
        throw InputError("latitude out of range for UTM (|lat| must be < 84 deg)");

    const KruegerSeries& k = series();
    const double phi = lat_deg * kDegToRad;
    const double dlon = normalize_lon(lon_deg - utm_central_meridian(zone));
    const double lam = dlon * kDegToRad;

    const double tau = std::tan(phi);
    const double taup = tau_prime(tau, k.e);
    const double cos_lam = std::cos(lam);
    const double sin_lam = std::sin(lam);

    const double xi_p = std::atan2(taup, cos_lam);
    const double eta_p = std::asinh(sin_lam / std::hypot(taup, cos_lam));

    double xi = xi_p;
    double eta = eta_p;
    for (int i = 0; i < 6; ++i) {
        const double arg = 2.0 * (i + 1);
        xi += k.alpha[i] * std::sin(arg * xi_p) * std::cosh(arg * eta_p);
        eta += k.alpha[i] * std::cos(arg * xi_p) * std::sinh(arg * eta_p);
    }

    UtmCoord out;
    out.easting = kFalseEasting + kScale * k.radius * eta;
    out.northing = kScale * k.radius * xi;
    if (hemisphere == Hemisphere::South)
        out.northing += kFalseNorthingSouth;
    return out;
}

LatLon utm_inverse(double easting, double northing, int zone, Hemisphere hemisphere)
{
    check_zone(zone);
    if (!std::isfinite(easting) || !std::isfinite(northing))
        throw InputError("utm_inverse requires finite coordinates");

    const KruegerSeries& k = series();
    const double y = hemisphere == Hemisphere::South ? northing - kFalseNorthingSouth : northing;
    const double xi = y / (kScale * k.radius);
    const double eta = (easting - kFalseEasting) / (kScale * k.radius);

    double xi_p = xi;
    double eta_p = eta;
    for (int i = 0; i < 6; ++i) {
        const double arg = 2.0 * (i + 1);
        xi_p -= k.beta[i] * std::sin(arg * xi) * std::cosh(arg * eta);
        eta_p -= k.beta[i] * std::cos(arg * xi) * std::sinh(arg * eta);
    }

    const double sinh_eta = std::sinh(eta_p);
    const double cos_xi = std::cos(xi_p);
    const double taup = std::sin(xi_p) / std::hypot(sinh_eta, cos_xi);
    const double tau = tau_from_tau_prime(taup, k.e);

    LatLon out;
    out.lat = std::atan(tau) * kRadToDeg;
    out.lon = normalize_lon(utm_central_meridian(zone) + std::atan2(sinh_eta, cos_xi) * kRadToDeg);
    return out;
}

// --- Resampling --------------------------------------------------------------

namespace {

void check_resample_inputs(const Raster& src, const GridGeometry& target)
{
    src.validate();
    target.validate();
    if (!(src.geom.crs == target.crs))
        throw InputError("resample requires matching CRS on source and target");
    if (target.pixel_size < src.geom.pixel_size)
        throw InputError("resample target pixel size must not be finer than the source");
}

// Target cell containing a map coordinate; false when outside the grid.
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

} // namespace

GridGeometry coarsened_grid(const GridGeometry& src, double pixel_size)
{
    src.validate();
    if (!(pixel_size > 0.0))
        throw InputError("pixel size must be positive");
    GridGeometry g;
    g.pixel_size = pixel_size;
    g.crs = src.crs;
    g.origin_x = std::floor(src.min_x() / pixel_size) * pixel_size;
    g.origin_y = std::ceil(src.max_y() / pixel_size) * pixel_size;
    g.cols = std::max<std::size_t>(1, static_cast<std::size_t>(
        std::ceil((src.max_x() - g.origin_x) / pixel_size)));
    g.rows = std::max<std::size_t>(1, static_cast<std::size_t>(
        std::ceil((g.origin_y - src.min_y()) / pixel_size)));
    return g;
}

Raster resample_max(const Raster& src, const GridGeometry& target)
{
    check_resample_inputs(src, target);

    Raster out(target, src.nodata, src.nodata);
    std::vector<char> seen(target.size(), 0);
    for (std::size_t r = 0; r < src.geom.rows; ++r) {
        const double cy = src.geom.center_y(r);
        for (std::size_t c = 0; c < src.geom.cols; ++c) {
            const float v = src.at(r, c);
            if (v == src.nodata)
                continue;
            std::size_t tr, tc;
            if (!locate(target, src.geom.center_x(c), cy, tr, tc))
                continue;
            const std::size_t idx = tr * target.cols + tc;
            if (!seen[idx] || v > out.values[idx]) {
                out.values[idx] = v;
                seen[idx] = 1;
            }
        }
    }
    return out;
}

Raster resample_mean(const Raster& src, const GridGeometry& target)
{
    check_resample_inputs(src, target);

    Raster out(target, src.nodata, src.nodata);
    std::vector<double> sum(target.size(), 0.0);
    std::vector<std::size_t> count(target.size(), 0);
    for (std::size_t r = 0; r < src.geom.rows; ++r) {
        const double cy = src.geom.center_y(r);
        for (std::size_t c = 0; c < src.geom.cols; ++c) {
            const float v = src.at(r, c);
            if (v == src.nodata)
                continue;
            std::size_t tr, tc;
            if (!locate(target, src.geom.center_x(c), cy, tr, tc))
                continue;
            const std::size_t idx = tr * target.cols + tc;
            sum[idx] += static_cast<double>(v);
            ++count[idx];
        }
    }
    for (std::size_t i = 0; i < out.values.size(); ++i)
        if (count[i] > 0)
            out.values[i] = static_cast<float>(sum[i] / static_cast<double>(count[i]));
    return out;
}

// --- Reprojection --------------------------------------------------------------

namespace {

struct ProjectionPlan {
    Crs target_crs;
    bool identity; // source already in the target CRS
};

LatLon to_lat_lon(const Crs& crs, double x, double y)
{
    if (crs.kind == Crs::Kind::Geographic)
        return LatLon{y, x};
    return utm_inverse(x, y, crs.zone, crs.hemisphere);
}

ProjectionPlan plan_reprojection(const GridGeometry& src)
{
    const double cx = (src.min_x() + src.max_x()) / 2.0;
    const double cy = (src.min_y() + src.max_y()) / 2.0;
    const LatLon center = to_lat_lon(src.crs, cx, cy);
    ProjectionPlan plan;
    plan.target_crs = Crs::utm(utm_zone_from_lon(center.lon),
                               center.lat >= 0.0 ? Hemisphere::North : Hemisphere::South);
    plan.identity = src.crs == plan.target_crs;
    return plan;
}

UtmCoord project_point(const ProjectionPlan& plan, const Crs& src_crs, double x, double y)
{
    if (plan.identity)
        return UtmCoord{x, y};
    const LatLon ll = to_lat_lon(src_crs, x, y);
    return utm_forward(ll.lat, ll.lon, plan.target_crs.zone, plan.target_crs.hemisphere);
}

// Maps a target UTM coordinate back into source grid indices.
bool unproject_to_src(const ProjectionPlan& plan, const GridGeometry& src,
                      double tx, double ty, std::size_t& row, std::size_t& col)
{
    double sx = tx, sy = ty;
    if (!plan.identity) {
        const LatLon ll = utm_inverse(tx, ty, plan.target_crs.zone, plan.target_crs.hemisphere);
        if (src.crs.kind == Crs::Kind::Geographic) {
            sx = ll.lon;
            sy = ll.lat;
        } else {
            const UtmCoord c = utm_forward(ll.lat, ll.lon, src.crs.zone, src.crs.hemisphere);
            sx = c.easting;
            sy = c.northing;
        }
    }
    return locate(src, sx, sy, row, col);
}

GridGeometry target_grid_from_centers(const std::vector<double>& fx, const std::vector<double>& fy,
                                      double pixel_size, const Crs& crs)
{
    double min_x = fx[0], max_x = fx[0], min_y = fy[0], max_y = fy[0];
    for (std::size_t i = 1; i < fx.size(); ++i) {
        min_x = std::min(min_x, fx[i]);
        max_x = std::max(max_x, fx[i]);
        min_y = std::min(min_y, fy[i]);
        max_y = std::max(max_y, fy[i]);
    }
    GridGeometry g;
    g.pixel_size = pixel_size;
    g.crs = crs;
    g.origin_x = std::floor(min_x / pixel_size) * pixel_size;
    g.origin_y = std::ceil(max_y / pixel_size) * pixel_size;
    g.cols = static_cast<std::size_t>(std::floor((max_x - g.origin_x) / pixel_size)) + 1;
    g.rows = static_cast<std::size_t>(std::floor((g.origin_y - min_y) / pixel_size)) + 1;
    return g;
}

} // namespace

Raster reproject_to_utm(const Raster& src, double pixel_size)
{
    src.validate();
    if (!(pixel_size > 0.0))
        throw InputError("reprojection pixel size must be positive");
    if (src.count_valid() == 0)
        throw InputError("cannot reproject a raster with no valid cells");

    const ProjectionPlan plan = plan_reprojection(src.geom);

    const std::size_t n = src.geom.size();
    std::vector<double> fx(n), fy(n);
    for (std::size_t r = 0; r < src.geom.rows; ++r) {
        const double cy = src.geom.center_y(r);
        for (std::size_t c = 0; c < src.geom.cols; ++c) {
            const UtmCoord p = project_point(plan, src.geom.crs, src.geom.center_x(c), cy);
            fx[r * src.geom.cols + c] = p.easting;
            fy[r * src.geom.cols + c] = p.northing;
        }
    }

    const GridGeometry target = target_grid_from_centers(fx, fy, pixel_size, plan.target_crs);
    Raster out(target, src.nodata, src.nodata);
    std::vector<char> seen(target.size(), 0);

    for (std::size_t i = 0; i < n; ++i) {
        const float v = src.values[i];
        if (v == src.nodata)
            continue;
        std::size_t tr, tc;
        if (!locate(target, fx[i], fy[i], tr, tc))
            continue;
        const std::size_t idx = tr * target.cols + tc;
        if (!seen[idx] || v > out.values[idx]) {
            out.values[idx] = v;
            seen[idx] = 1;
        }
    }

    parallel_chunks(target.rows, [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t r = row_begin; r < row_end; ++r) {
            const double ty = target.center_y(r);
            for (std::size_t c = 0; c < target.cols; ++c) {
                const std::size_t idx = r * target.cols + c;
                if (seen[idx])
                    continue;
                std::size_t sr, sc;
                if (unproject_to_src(plan, src.geom, target.center_x(c), ty, sr, sc))
                    out.values[idx] = src.at(sr, sc);
            }
        }
    });
    return out;
}

RgbImage reproject_to_utm(const RgbImage& src, double pixel_size)
{
    src.validate();
    if (!(pixel_size > 0.0))
        throw InputError("reprojection pixel size must be positive");

    const ProjectionPlan plan = plan_reprojection(src.geom);

    const std::size_t n = src.geom.size();
    std::vector<double> fx(n), fy(n);
    for (std::size_t r = 0; r < src.geom.rows; ++r) {
        const double cy = src.geom.center_y(r);
        for (std::size_t c = 0; c < src.geom.cols; ++c) {
            const UtmCoord p = project_point(plan, src.geom.crs, src.geom.center_x(c), cy);
            fx[r * src.geom.cols + c] = p.easting;
            fy[r * src.geom.cols + c] = p.northing;
        }
    }

    const GridGeometry target = target_grid_from_centers(fx, fy, pixel_size, plan.target_crs);
    RgbImage out(target);

    parallel_chunks(target.rows, [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t r = row_begin; r < row_end; ++r) {
            const double ty = target.center_y(r);
            for (std::size_t c = 0; c < target.cols; ++c) {
                std::size_t sr, sc;
                if (!unproject_to_src(plan, src.geom, target.center_x(c), ty, sr, sc))
                    continue;
                const std::size_t to = r * target.cols + c;
                const std::size_t from = sr * src.geom.cols + sc;
                out.r[to] = src.r[from];
                out.g[to] = src.g[from];
                out.b[to] = src.b[from];
            }
        }
    });
    return out;
}

} // namespace chmkit
