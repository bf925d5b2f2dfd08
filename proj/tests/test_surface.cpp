#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chmkit/error.hpp"
#include "chmkit/surface.hpp"
#include "support/oracles.hpp"
#include "support/random_raster.hpp"
#include "support/synthetic.hpp"

#include <cmath>
#include <random>

using namespace chmkit;

namespace {

const Crs kUtm33 = Crs::utm(33, Hemisphere::North);

PointCloud cloud_from(std::initializer_list<PointRecord> pts)
{
    PointCloud pc;
    pc.crs = kUtm33;
    pc.points = pts;
    return pc;
}

} // namespace

TEST_CASE("rasterize_surfaces grids a constant ground plane")
{
    PointCloud ground;
    ground.crs = kUtm33;
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x)
            ground.points.push_back({x + 0.5, y + 0.5, 3.0, std::nullopt});

    const GridGeometry grid = grid_covering(ground, 3.0);
    const SurfacePair pair = rasterize_surfaces(ground, ground, grid);
    for (float v : pair.dem.values)
        CHECK(v == 3.0f);
    for (float v : pair.dsm.values)
        CHECK(v == 3.0f);
}

TEST_CASE("rasterize_surfaces takes per-cell mean for DEM and max for DSM")
{
    const PointCloud ground = cloud_from({{0.5, 0.5, 2.0, std::nullopt}, {1.5, 1.5, 4.0, std::nullopt}});
    const PointCloud canopy = cloud_from({{0.6, 0.6, 12.0, std::nullopt}, {1.2, 1.2, 7.0, std::nullopt}});

    GridGeometry grid = fixtures::grid(1, 1, 3.0);
    const SurfacePair pair = rasterize_surfaces(ground, canopy, grid);
    CHECK(pair.dem.at(0, 0) == 3.0f);  // mean of 2 and 4
    CHECK(pair.dsm.at(0, 0) == 12.0f); // max of 12 and 7
}

TEST_CASE("rasterize_surfaces marks canopy-free cells with -1")
{
    PointCloud ground;
    ground.crs = kUtm33;
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            ground.points.push_back({x + 0.5, y + 0.5, 2.0, std::nullopt});
    // Canopy only in the first 3 m cell.
    const PointCloud canopy = cloud_from({{1.0, 5.0, 12.0, std::nullopt}});

    const GridGeometry grid = grid_covering(ground, 3.0);
    const SurfacePair pair = rasterize_surfaces(ground, canopy, grid);
    std::size_t minus_one = 0;
    for (float v : pair.dsm.values)
        if (v == -1.0f)
            ++minus_one;
    CHECK(minus_one == pair.dsm.values.size() - 1);
    CHECK(pair.dem.count_valid() == pair.dem.values.size()); // gap-filled
}

TEST_CASE("rasterize_surfaces supports the min DEM statistic")
{
    const PointCloud ground = cloud_from({{0.5, 0.5, 2.0, std::nullopt}, {1.5, 1.5, 4.0, std::nullopt}});
    GridGeometry grid = fixtures::grid(1, 1, 3.0);
    const SurfacePair pair = rasterize_surfaces(ground, ground, grid, DemStatistic::Min);
    CHECK(pair.dem.at(0, 0) == 2.0f);
}

TEST_CASE("rasterize_surfaces rejects empty ground and out-of-grid points")
{
    PointCloud empty;
    empty.crs = kUtm33;
    const PointCloud ground = cloud_from({{0.5, 0.5, 1.0, std::nullopt}});
    GridGeometry grid = fixtures::grid(1, 1, 3.0);
    CHECK_THROWS_AS(rasterize_surfaces(empty, ground, grid), InputError);

    const PointCloud outside = cloud_from({{10.5, 0.5, 1.0, std::nullopt}});
    CHECK_THROWS_AS(rasterize_surfaces(outside, outside, grid), InputError);
}

TEST_CASE("dsm values are always attained by an input point")
{
    std::mt19937 rng(61);
    std::uniform_real_distribution<double> pos(0.0, 30.0);
    std::uniform_real_distribution<double> z(0.0, 25.0);
    PointCloud pts;
    pts.crs = kUtm33;
    for (int i = 0; i < 500; ++i)
        pts.points.push_back({pos(rng), pos(rng), z(rng), std::nullopt});

    const SurfacePair pair = rasterize_surfaces(pts, pts, grid_covering(pts, 3.0));
    for (float v : pair.dsm.values) {
        if (v == -1.0f)
            continue;
        bool attained = false;
        for (const auto& p : pts.points)
            if (static_cast<float>(p.z) == v)
                attained = true;
        CHECK(attained);
    }
}

// --- Spline gap filling -----------------------------------------------------------

TEST_CASE("fill_gaps_spline recovers a linear ramp exactly")
{
    Raster r(fixtures::grid(5, 1), -9999.0f, 0.0f);
    r.values = {0.0f, 2.0f, -9999.0f, 6.0f, 8.0f};
    const Raster filled = fill_gaps_spline(r);
    CHECK(filled.at(0, 2) == doctest::Approx(4.0).epsilon(1e-6));
    // Valid cells bit-identical.
    CHECK(filled.values[0] == 0.0f);
    CHECK(filled.values[1] == 2.0f);
    CHECK(filled.values[3] == 6.0f);
    CHECK(filled.values[4] == 8.0f);
}

TEST_CASE("fill_gaps_spline returns gap-free rasters unchanged")
{
    std::mt19937 rng(67);
    const Raster r = fixtures::random_raster(rng, 9, 7, 0.0);
    const Raster filled = fill_gaps_spline(r);
    CHECK(filled.values == r.values);
    CHECK(filled.geom == r.geom);
}

TEST_CASE("fill_gaps_spline matches the dense spline oracle on a quadratic row")
{
    // One interior gap in a single-row raster: only the row direction
    // contributes, so the fill equals the 1D natural spline estimate.
    const std::size_t n = 9;
    Raster r(fixtures::grid(n, 1), -9999.0f, 0.0f);
    std::vector<double> xs, ys;
    for (std::size_t c = 0; c < n; ++c) {
        const double v = 0.5 * (static_cast<double>(c) - 3.0) * (static_cast<double>(c) - 3.0);
        if (c == 4) {
            r.at(0, c) = r.nodata;
        } else {
            r.at(0, c) = static_cast<float>(v);
            xs.push_back(static_cast<double>(c));
            ys.push_back(static_cast<double>(r.at(0, c)));
        }
    }
    const oracles::DenseNaturalSpline oracle(xs, ys);
    const double want = oracle.eval(4.0);
    const Raster filled = fill_gaps_spline(r);
    CHECK(std::fabs(filled.at(0, 4) - want) < 1e-6);
    CHECK(static_cast<float>(want) == filled.at(0, 4)); // equal after f32 rounding
}

TEST_CASE("fill_gaps_spline averages row and column estimates for interior gaps")
{
    const std::size_t n = 7;
    Raster r(fixtures::grid(n, n), -9999.0f, 0.0f);
    for (std::size_t row = 0; row < n; ++row)
        for (std::size_t col = 0; col < n; ++col)
            r.at(row, col) = static_cast<float>(
                0.3 * col * col + 0.1 * row * row + 0.25 * col + static_cast<double>(row));
    r.at(3, 3) = r.nodata;

    std::vector<double> row_x, row_y, col_x, col_y;
    for (std::size_t c = 0; c < n; ++c)
        if (c != 3) {
            row_x.push_back(static_cast<double>(c));
            row_y.push_back(static_cast<double>(r.at(3, c)));
        }
    for (std::size_t row = 0; row < n; ++row)
        if (row != 3) {
            col_x.push_back(static_cast<double>(row));
            col_y.push_back(static_cast<double>(r.at(row, 3)));
        }
    const double want = (oracles::DenseNaturalSpline(row_x, row_y).eval(3.0)
                         + oracles::DenseNaturalSpline(col_x, col_y).eval(3.0))
                      / 2.0;

    const Raster filled = fill_gaps_spline(r);
    CHECK(std::fabs(filled.at(3, 3) - want) < 1e-6);
    CHECK(static_cast<float>(want) == filled.at(3, 3));
}

TEST_CASE("fill_gaps_spline uses one direction when the other cannot bracket")
{
    // Gap on the top row: no valid cell above, so only the row spline runs.
    Raster r(fixtures::grid(5, 3), -9999.0f, 1.0f);
    r.at(0, 2) = r.nodata;
    for (std::size_t c = 0; c < 5; ++c) {
        r.at(1, c) = r.nodata;
        r.at(2, c) = r.nodata;
    }
    r.at(1, 0) = 1.0f;
    r.at(2, 0) = 1.0f;
    const Raster filled = fill_gaps_spline(r);
    CHECK(filled.at(0, 2) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fill_gaps_spline copies the nearest value outside the hull")
{
    Raster r(fixtures::grid(4, 4), -9999.0f, -9999.0f);
    r.at(1, 1) = 5.0f;
    r.at(2, 2) = 9.0f;
    const Raster filled = fill_gaps_spline(r);
    CHECK(filled.count_valid() == filled.values.size());
    CHECK(filled.at(0, 0) == 5.0f); // nearest valid cell
    CHECK(filled.at(3, 3) == 9.0f);
}

TEST_CASE("fill_gaps_spline leaves valid cells bit-identical on random rasters")
{
    std::mt19937 rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const Raster r = fixtures::random_raster(rng, 15, 11, 0.3);
        if (r.count_valid() == 0)
            continue;
        const Raster filled = fill_gaps_spline(r);
        CHECK(filled.count_valid() == filled.values.size());
        for (std::size_t i = 0; i < r.values.size(); ++i)
            if (r.values[i] != r.nodata)
                CHECK(filled.values[i] == r.values[i]);
    }
}

TEST_CASE("fill_gaps_spline rejects all-nodata rasters")
{
    Raster r(fixtures::grid(4, 4), -9999.0f, -9999.0f);
    CHECK_THROWS_AS(fill_gaps_spline(r), InputError);
}

// --- CHM derivation -------------------------------------------------------------------

TEST_CASE("derive_chm subtracts and clamps")
{
    SurfacePair pair;
    pair.dem = Raster(fixtures::grid(3, 1), -9999.0f, 0.0f);
    pair.dsm = Raster(fixtures::grid(3, 1), -9999.0f, 0.0f);
    pair.dem.values = {12.2f, 12.0f, 5.0f};
    pair.dsm.values = {15.2f, 10.0f, -1.0f};
    const ChmRaster chm = derive_chm(pair);
    CHECK(chm.at(0, 0) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(chm.at(0, 1) == 0.0f); // negative clamped
    CHECK(chm.at(0, 2) == 0.0f); // -1 marker minus ground clamps too
}

TEST_CASE("derive_chm propagates nodata and validates geometry")
{
    SurfacePair pair;
    pair.dem = Raster(fixtures::grid(2, 1), -9999.0f, 1.0f);
    pair.dsm = Raster(fixtures::grid(2, 1), -9999.0f, 5.0f);
    pair.dsm.values[1] = pair.dsm.nodata;
    const ChmRaster chm = derive_chm(pair);
    CHECK(chm.at(0, 0) == 4.0f);
    CHECK(chm.is_nodata(0, 1));

    pair.dsm = Raster(fixtures::grid(3, 1), -9999.0f, 5.0f);
    CHECK_THROWS_AS(derive_chm(pair), InputError);
}

TEST_CASE("derive_chm output is never negative on random inputs")
{
    std::mt19937 rng(73);
    for (int trial = 0; trial < 10; ++trial) {
        SurfacePair pair;
        pair.dsm = fixtures::random_raster(rng, 12, 12, 0.1, -20.0, 30.0);
        pair.dem = fixtures::random_raster(rng, 12, 12, 0.1, -20.0, 30.0);
        const ChmRaster chm = derive_chm(pair);
        for (float v : chm.values)
            if (v != chm.nodata)
                CHECK(v >= 0.0f);
    }
}

TEST_CASE("chm_from_products reduces to derive_chm on aligned grids")
{
    std::mt19937 rng(79);
    const Raster dsm = fixtures::random_raster(rng, 10, 8, 0.1, 0.0, 40.0);
    const Raster dem = fixtures::random_raster(rng, 10, 8, 0.1, 0.0, 10.0);
    const ChmRaster a = chm_from_products(dsm, dem);
    const ChmRaster b = derive_chm(SurfacePair{dem, dsm});
    CHECK(a.values == b.values);
}

TEST_CASE("chm_from_products aggregates a finer DSM by max")
{
    // 3x3 block of 1 m DSM cells over a single 3 m DEM cell.
    Raster dsm(fixtures::grid(3, 3, 1.0), -9999.0f, 0.0f);
    dsm.values = {3.0f, 7.0f, 20.0f, 1.0f, 2.0f, 3.0f, 0.0f, 5.0f, 4.0f};
    Raster dem(fixtures::grid(1, 1, 3.0), -9999.0f, 5.0f);
    const ChmRaster chm = chm_from_products(dsm, dem);
    REQUIRE(chm.values.size() == 1);
    CHECK(chm.at(0, 0) == 15.0f); // max 20 minus 5
}

TEST_CASE("chm_from_products propagates DEM nodata")
{
    Raster dsm(fixtures::grid(2, 1, 3.0), -9999.0f, 10.0f);
    Raster dem(fixtures::grid(2, 1, 3.0), -9999.0f, 2.0f);
    dem.values[1] = dem.nodata;
    const ChmRaster chm = chm_from_products(dsm, dem);
    CHECK(chm.at(0, 0) == 8.0f);
    CHECK(chm.is_nodata(0, 1));
}

TEST_CASE("chm_from_products rejects disjoint extents and mixed CRS")
{
    Raster dsm(fixtures::grid(4, 4, 1.0), -9999.0f, 10.0f);
    Raster dem(fixtures::grid(4, 4, 1.0), -9999.0f, 2.0f);
    dem.geom.origin_x = 100.0;
    CHECK_THROWS_AS(chm_from_products(dsm, dem), InputError);
    dem.geom.origin_x = 0.0;
    dem.geom.crs = Crs::wgs84();
    CHECK_THROWS_AS(chm_from_products(dsm, dem), InputError);
}

TEST_CASE("chm_from_products aggregates a finer DEM by mean")
{
    Raster dem(fixtures::grid(2, 2, 1.0), -9999.0f, 0.0f);
    dem.values = {1.0f, 3.0f, 5.0f, 7.0f};
    dem.geom.origin_y = 2.0;
    Raster dsm(fixtures::grid(1, 1, 2.0), -9999.0f, 20.0f);
    dsm.geom.origin_y = 2.0;
    const ChmRaster chm = chm_from_products(dsm, dem);
    REQUIRE(chm.values.size() == 1);
    CHECK(chm.at(0, 0) == 16.0f); // 20 - mean(1,3,5,7)
}

// --- Cloud mask --------------------------------------------------------------------------

TEST_CASE("apply_cloud_mask clears exactly the flagged cells")
{
    std::mt19937 rng(83);
    const Raster r = fixtures::random_raster(rng, 8, 8, 0.0);

    Raster zeros(r.geom, -9999.0f, 0.0f);
    CHECK(apply_cloud_mask(r, zeros).values == r.values);

    Raster ones(r.geom, -9999.0f, 1.0f);
    const Raster cleared = apply_cloud_mask(r, ones);
    for (float v : cleared.values)
        CHECK(v == cleared.nodata);

    Raster checker(r.geom, -9999.0f, 0.0f);
    for (std::size_t row = 0; row < 8; ++row)
        for (std::size_t col = 0; col < 8; ++col)
            checker.at(row, col) = (row + col) % 2 == 0 ? 1.0f : 0.0f;
    const Raster mixed = apply_cloud_mask(r, checker);
    for (std::size_t row = 0; row < 8; ++row)
        for (std::size_t col = 0; col < 8; ++col) {
            if ((row + col) % 2 == 0)
                CHECK(mixed.is_nodata(row, col));
            else
                CHECK(mixed.at(row, col) == r.at(row, col));
        }
}

TEST_CASE("apply_cloud_mask validates inputs")
{
    Raster r(fixtures::grid(4, 4), -9999.0f, 1.0f);
    Raster mask(fixtures::grid(3, 4), -9999.0f, 0.0f);
    CHECK_THROWS_AS(apply_cloud_mask(r, mask), InputError);

    Raster bad(r.geom, -9999.0f, 0.5f);
    CHECK_THROWS_AS(apply_cloud_mask(r, bad), InputError);
}

// --- End-to-end synthetic scene -----------------------------------------------------------

TEST_CASE("classified scene yields per-crown CHM maxima near the true heights")
{
    synthetic::SceneSpec spec;
    spec.nx = 60;
    spec.ny = 60;
    spec.crown_count = 12;
    spec.classified = true;
    spec.seed = 97;
    const synthetic::Scene scene = synthetic::make_scene(spec);

    PointCloud ground, canopy;
    ground.crs = canopy.crs = scene.cloud.crs;
    for (const auto& p : scene.cloud.points)
        ((*p.classification == 2) ? ground : canopy).points.push_back(p);
    canopy.points.insert(canopy.points.end(), ground.points.begin(), ground.points.end());

    const GridGeometry grid = grid_covering(scene.cloud, 3.0);
    const SurfacePair pair = rasterize_surfaces(ground, canopy, grid);
    const ChmRaster chm = derive_chm(pair);

    for (const auto& crown : scene.crowns) {
        const double apex_x = 500000.0 + crown.cx;
        const double apex_y = 4000000.0 + crown.cy;
        const std::size_t col = static_cast<std::size_t>((apex_x - grid.origin_x) / grid.pixel_size);
        const std::size_t row = static_cast<std::size_t>((grid.origin_y - apex_y) / grid.pixel_size);
        float best = 0.0f;
        for (long long dr = -1; dr <= 1; ++dr)
            for (long long dc = -1; dc <= 1; ++dc) {
                const long long rr = static_cast<long long>(row) + dr;
                const long long cc = static_cast<long long>(col) + dc;
                if (rr < 0 || cc < 0 || rr >= static_cast<long long>(grid.rows)
                    || cc >= static_cast<long long>(grid.cols))
                    continue;
                const float v = chm.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                if (v != chm.nodata)
                    best = std::max(best, v);
            }
        CHECK(std::fabs(best - crown.height) <= 0.5);
    }
}
