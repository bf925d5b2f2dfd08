#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chmkit/error.hpp"
#include "chmkit/geo.hpp"
#include "chmkit/util.hpp"
#include "support/oracles.hpp"
#include "support/random_raster.hpp"

#include <cmath>
#include <random>

using namespace chmkit;

TEST_CASE("utm_forward central meridian anchors")
{
    const UtmCoord north = utm_forward(0.0, 15.0, 33, Hemisphere::North);
    CHECK(north.easting == doctest::Approx(500000.0).epsilon(1e-12));
    CHECK(north.northing == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    const UtmCoord south = utm_forward(0.0, 15.0, 33, Hemisphere::South);
    CHECK(south.easting == doctest::Approx(500000.0).epsilon(1e-12));
    CHECK(south.northing == doctest::Approx(10000000.0).epsilon(1e-12));
}

TEST_CASE("utm_forward matches the independent geodesy oracle to 1 mm")
{
    // Mid-latitude control points, both hemispheres, within 3 deg of the zone
    // central meridian.
    struct Control {
        double lat, lon;
        int zone;
        Hemisphere hemi;
    };
    const Control controls[] = {
        {40.0, -74.5, 18, Hemisphere::North},   // CM -75
        {47.3, 9.8, 32, Hemisphere::North},     // CM 9
        {-33.45, -70.66, 19, Hemisphere::South} // CM -69
    };
    for (const auto& c : controls) {
        const UtmCoord got = utm_forward(c.lat, c.lon, c.zone, c.hemi);
        const UtmCoord want = oracles::snyder_utm_forward(c.lat, c.lon, c.zone, c.hemi);
        CHECK(std::fabs(got.easting - want.easting) < 1e-3);
        CHECK(std::fabs(got.northing - want.northing) < 1e-3);
    }

    // Sweep the usable zone width at several latitudes.
    for (double lat = -72.0; lat <= 72.0; lat += 8.0) {
        for (double dlon = -3.0; dlon <= 3.0; dlon += 0.5) {
            const UtmCoord got = utm_forward(lat, 15.0 + dlon, 33,
                                             lat >= 0 ? Hemisphere::North : Hemisphere::South);
            const UtmCoord want = oracles::snyder_utm_forward(
                lat, 15.0 + dlon, 33, lat >= 0 ? Hemisphere::North : Hemisphere::South);
            CHECK(std::fabs(got.easting - want.easting) < 1e-3);
            CHECK(std::fabs(got.northing - want.northing) < 1e-3);
        }
    }
}

TEST_CASE("utm round trip is below 1e-9 degrees")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> lat_d(-80.0, 80.0);
    std::uniform_real_distribution<double> dlon_d(-3.0, 3.0);
    for (const Hemisphere hemi : {Hemisphere::North, Hemisphere::South}) {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double lat = lat_d(rng);
            const double lon = 15.0 + dlon_d(rng);
            const UtmCoord c = utm_forward(lat, lon, 33, hemi);
            const LatLon back = utm_inverse(c.easting, c.northing, 33, hemi);
            worst = std::max({worst, std::fabs(back.lat - lat), std::fabs(back.lon - lon)});
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("utm_inverse of the false easting is the central meridian")
{
    const LatLon ll = utm_inverse(500000.0, 0.0, 33, Hemisphere::North);
    CHECK(ll.lat == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(ll.lon == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("utm input validation")
{
    CHECK_THROWS_AS(utm_forward(84.0, 10.0, 33, Hemisphere::North), InputError);
    CHECK_THROWS_AS(utm_forward(-89.0, 10.0, 33, Hemisphere::North), InputError);
    CHECK_THROWS_AS(utm_forward(10.0, 10.0, 0, Hemisphere::North), InputError);
    CHECK_THROWS_AS(utm_forward(10.0, 10.0, 61, Hemisphere::North), InputError);
    CHECK_THROWS_AS(utm_inverse(std::nan(""), 0.0, 33, Hemisphere::North), InputError);
    CHECK_NOTHROW(utm_forward(83.9, 10.0, 33, Hemisphere::North));
}

TEST_CASE("utm_zone_from_lon")
{
    CHECK(utm_zone_from_lon(15.0) == 33);
    CHECK(utm_zone_from_lon(-180.0) == 1);
    CHECK(utm_zone_from_lon(180.0) == 1); // wraps to -180
    CHECK(utm_zone_from_lon(179.9) == 60);
    CHECK(utm_central_meridian(33) == doctest::Approx(15.0));
}

TEST_CASE("resample_max aggregates blocks")
{
    Raster src(fixtures::grid(2, 2, 1.0), -9999.0f, 0.0f);
    src.at(0, 0) = 1.0f;
    src.at(0, 1) = 3.0f;
    src.at(1, 0) = 2.0f;
    src.at(1, 1) = 4.0f;
    const GridGeometry target = fixtures::grid(1, 1, 2.0);
    const Raster out = resample_max(src, target);
    CHECK(out.at(0, 0) == 4.0f);
}

TEST_CASE("resample_max of a constant raster stays constant")
{
    const Raster src = fixtures::constant_raster(9, 9, 7.0f, 1.0);
    const Raster out = resample_max(src, fixtures::grid(3, 3, 3.0));
    for (float v : out.values)
        CHECK(v == 7.0f);
}

TEST_CASE("resample_max of an all-nodata raster is all-nodata")
{
    Raster src(fixtures::grid(6, 6, 1.0), -9999.0f, -9999.0f);
    const Raster out = resample_max(src, fixtures::grid(2, 2, 3.0));
    for (float v : out.values)
        CHECK(v == out.nodata);
}

TEST_CASE("resample_max rejects CRS mismatch and upsampling")
{
    const Raster src = fixtures::constant_raster(4, 4, 1.0f, 2.0);
    GridGeometry target = fixtures::grid(2, 2, 4.0);
    target.crs = Crs::wgs84();
    CHECK_THROWS_AS(resample_max(src, target), InputError);
    CHECK_THROWS_AS(resample_max(src, fixtures::grid(8, 8, 1.0)), InputError);
}

TEST_CASE("resample_max equals brute-force gathering on misaligned grids")
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> shift(-1.5, 1.5);
    std::uniform_int_distribution<int> dim(5, 24);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t cols = dim(rng), rows = dim(rng);
        Raster src = fixtures::random_raster(rng, cols, rows, 0.15);
        src.geom.origin_x = shift(rng);
        src.geom.origin_y = rows * 1.0 + shift(rng);

        GridGeometry target = fixtures::grid((cols + 2) / 3, (rows + 2) / 3, 3.0);
        target.origin_x = std::floor(src.geom.origin_x);
        target.origin_y = std::ceil(src.geom.origin_y);

        const Raster got = resample_max(src, target);
        const Raster want = oracles::brute_resample_max(src, target);
        REQUIRE(got.values.size() == want.values.size());
        for (std::size_t i = 0; i < got.values.size(); ++i)
            CHECK(got.values[i] == want.values[i]);
    }
}

TEST_CASE("resample_max output values all come from contributing sources")
{
    std::mt19937 rng(5);
    const Raster src = fixtures::random_raster(rng, 17, 13, 0.2);
    const Raster out = resample_max(src, fixtures::grid(6, 5, 3.0));
    for (float v : out.values) {
        if (v == out.nodata)
            continue;
        bool found = false;
        for (float s : src.values)
            if (s == v)
                found = true;
        CHECK(found);
    }
    // The global maximum survives aggregation.
    float src_max = -1e30f;
    for (std::size_t i = 0; i < src.values.size(); ++i)
        if (src.values[i] != src.nodata)
            src_max = std::max(src_max, src.values[i]);
    float out_max = -1e30f;
    for (float v : out.values)
        if (v != out.nodata)
            out_max = std::max(out_max, v);
    CHECK(out_max == src_max);
}

TEST_CASE("resample_mean averages contributing cells")
{
    Raster src(fixtures::grid(2, 2, 1.0), -9999.0f, 0.0f);
    src.at(0, 0) = 1.0f;
    src.at(0, 1) = 3.0f;
    src.at(1, 0) = 2.0f;
    src.at(1, 1) = 4.0f;
    const Raster out = resample_mean(src, fixtures::grid(1, 1, 2.0));
    CHECK(out.at(0, 0) == doctest::Approx(2.5));
}

TEST_CASE("reproject_to_utm is the identity for an aligned in-zone raster")
{
    std::mt19937 rng(3);
    Raster src = fixtures::random_raster(rng, 12, 9, 0.1);
    src.geom.pixel_size = 3.0;
    src.geom.origin_x = 499002.0; // already on the 3 m grid

    src.geom.origin_y = 4000002.0;
    src.geom.crs = Crs::utm(33, Hemisphere::North);

    const Raster out = reproject_to_utm(src, 3.0);
    CHECK(out.geom == src.geom);
    CHECK(out.values == src.values);

    // Determinism: bit-identical on a second run.
    const Raster again = reproject_to_utm(src, 3.0);
    CHECK(again.values == out.values);
}

TEST_CASE("reproject_to_utm maps a single pixel to its projected cell")
{
    Raster src(fixtures::grid(1, 1, 0.001), -9999.0f, 21.5f);
    src.geom.crs = Crs::wgs84();
    src.geom.origin_x = 15.0;  // cell center 15.0005, 49.9995
    src.geom.origin_y = 50.0;

    const Raster out = reproject_to_utm(src, 3.0);
    CHECK(out.geom.crs.kind == Crs::Kind::Utm);
    CHECK(out.geom.crs.zone == 33);
    const UtmCoord c = utm_forward(49.9995, 15.0005, 33, Hemisphere::North);
    const std::size_t col = static_cast<std::size_t>((c.easting - out.geom.origin_x) / 3.0);
    const std::size_t row = static_cast<std::size_t>((out.geom.origin_y - c.northing) / 3.0);
    CHECK(out.at(row, col) == 21.5f);
}

TEST_CASE("reproject_to_utm matches brute-force recomputation cell by cell")
{
    std::mt19937 rng(19);
    Raster src = fixtures::random_raster(rng, 10, 10, 0.1);
    src.geom.crs = Crs::wgs84();
    src.geom.origin_x = 14.99;
    src.geom.origin_y = 50.01;
    src.geom.pixel_size = 0.0003;

    const Raster out = reproject_to_utm(src, 30.0);

    // Gather max per output cell over projected source centers.
    std::vector<float> want(out.values.size(), out.nodata);
    std::vector<char> seen(out.values.size(), 0);
    for (std::size_t r = 0; r < src.geom.rows; ++r) {
        for (std::size_t c = 0; c < src.geom.cols; ++c) {
            if (src.is_nodata(r, c))
                continue;
            const UtmCoord p = utm_forward(src.geom.center_y(r), src.geom.center_x(c), 33,
                                           Hemisphere::North);
            const long long col = static_cast<long long>(
                std::floor((p.easting - out.geom.origin_x) / out.geom.pixel_size));
            const long long row = static_cast<long long>(
                std::floor((out.geom.origin_y - p.northing) / out.geom.pixel_size));
            REQUIRE(col >= 0);
            REQUIRE(row >= 0);
            REQUIRE(col < static_cast<long long>(out.geom.cols));
            REQUIRE(row < static_cast<long long>(out.geom.rows));
            const std::size_t i = static_cast<std::size_t>(row) * out.geom.cols
                                + static_cast<std::size_t>(col);
            if (!seen[i] || src.at(r, c) > want[i]) {
                want[i] = src.at(r, c);
                seen[i] = 1;
            }
        }
    }
    // Empty cells fall back to nearest-neighbor sampling at the cell center.
    for (std::size_t r = 0; r < out.geom.rows; ++r) {
        for (std::size_t c = 0; c < out.geom.cols; ++c) {
            const std::size_t i = r * out.geom.cols + c;
            if (seen[i])
                continue;
            const LatLon ll = utm_inverse(out.geom.center_x(c), out.geom.center_y(r), 33,
                                          Hemisphere::North);
            const double fc = std::floor((ll.lon - src.geom.origin_x) / src.geom.pixel_size);
            const double fr = std::floor((src.geom.origin_y - ll.lat) / src.geom.pixel_size);
            if (fc >= 0 && fr >= 0 && fc < static_cast<double>(src.geom.cols)
                && fr < static_cast<double>(src.geom.rows))
                want[i] = src.at(static_cast<std::size_t>(fr), static_cast<std::size_t>(fc));
        }
    }
    CHECK(out.values == want);
}

TEST_CASE("reproject_to_utm rejects empty sources")
{
    Raster src(fixtures::grid(4, 4), -9999.0f, -9999.0f);
    CHECK_THROWS_AS(reproject_to_utm(src, 3.0), InputError);
}

TEST_CASE("rgb reprojection uses nearest neighbor")
{
    GridGeometry g = fixtures::grid(8, 8, 3.0);
    g.origin_x = 500001.0;
    g.origin_y = 4000002.0;
    RgbImage img(g);
    for (std::size_t i = 0; i < img.r.size(); ++i) {
        img.r[i] = static_cast<std::uint8_t>(i * 3);
        img.g[i] = static_cast<std::uint8_t>(i * 5);
        img.b[i] = static_cast<std::uint8_t>(i * 7);
    }
    const RgbImage out = reproject_to_utm(img, 3.0);
    CHECK(out.geom.cols == img.geom.cols);
    CHECK(out.geom.rows == img.geom.rows);
    CHECK(out.r == img.r);
    CHECK(out.g == img.g);
    CHECK(out.b == img.b);
}

TEST_CASE("reprojection is bit-identical under any thread cap")
{
    std::mt19937 rng(227);
    Raster src = fixtures::random_raster(rng, 40, 30, 0.2);
    src.geom.crs = Crs::wgs84();
    src.geom.origin_x = 15.0;
    src.geom.origin_y = 50.0;
    src.geom.pixel_size = 0.0002;

    set_max_threads(1);
    const Raster sequential = reproject_to_utm(src, 30.0);
    for (unsigned threads : {2u, 5u}) {
        set_max_threads(threads);
        const Raster parallel = reproject_to_utm(src, 30.0);
        CHECK(parallel.values == sequential.values);
        CHECK(parallel.geom == sequential.geom);
    }
    set_max_threads(1);
}

TEST_CASE("crs parsing round trip")
{
    CHECK(Crs::parse("wgs84") == Crs::wgs84());
    CHECK(Crs::parse("utm:33:N") == Crs::utm(33, Hemisphere::North));
    CHECK(Crs::parse("utm:7:S") == Crs::utm(7, Hemisphere::South));
    CHECK(Crs::parse(Crs::utm(18, Hemisphere::South).to_string())
          == Crs::utm(18, Hemisphere::South));
    CHECK_THROWS_AS(Crs::parse("epsg:32633"), InputError);
    CHECK_THROWS_AS(Crs::parse("utm:0:N"), InputError);
}

TEST_CASE("grid geometry validation")
{
    GridGeometry g = fixtures::grid(4, 4);
    CHECK_NOTHROW(g.validate());
    g.pixel_size = 0.0;
    CHECK_THROWS_AS(g.validate(), InputError);
}
