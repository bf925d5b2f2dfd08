#include "chmkit/pipeline.hpp"

#include "chmkit/error.hpp"
#include "chmkit/util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>

namespace chmkit {

const char* tool_version() { return "0.1.0"; }

namespace {

InputKind parse_kind(const std::string& s)
{
    if (s == "point_cloud_classified")
        return InputKind::PointCloudClassified;
    if (s == "point_cloud_unclassified")
        return InputKind::PointCloudUnclassified;
    if (s == "dsm_dem_pair")
        return InputKind::DsmDemPair;
    if (s == "chm_product")
        return InputKind::ChmProduct;
    throw InputError("unknown input.kind '" + s + "'");
}

} // namespace

PipelineConfig PipelineConfig::from_config(const Config& cfg)
{
    PipelineConfig p;
    p.input_kind = parse_kind(cfg.get_string("input.kind"));
    p.output_path = cfg.get_string("output.path");
    p.input_crs = Crs::parse(cfg.get_string("input.crs", "wgs84"));
    p.pixel_size = cfg.get_double("grid.pixel_size", 3.0);

    switch (p.input_kind) {
    case InputKind::PointCloudClassified:
    case InputKind::PointCloudUnclassified:
        p.cloud_path = cfg.get_string("input.path");
        break;
    case InputKind::DsmDemPair:
        p.dsm_path = cfg.get_string("input.dsm");
        p.dem_path = cfg.get_string("input.dem");
        break;
    case InputKind::ChmProduct:
        p.chm_path = cfg.get_string("input.path");
        break;
    }
    p.rgb_path = cfg.get_string("input.rgb", "");
    p.cloud_mask_path = cfg.get_string("input.cloud_mask", "");

    p.outlier_k = static_cast<std::size_t>(cfg.get_int("outlier.k", 8));
    p.outlier_sigma_mult = cfg.get_double("outlier.sigma_mult", 3.0);

    p.csf.cloth_resolution = cfg.get_double("csf.cloth_resolution", 1.0);
    p.csf.rigidness = static_cast<int>(cfg.get_int("csf.rigidness", 2));
    p.csf.time_step = cfg.get_double("csf.time_step", 0.65);
    p.csf.class_threshold = cfg.get_double("csf.class_threshold", 0.5);
    p.csf.max_iterations = static_cast<std::size_t>(cfg.get_int("csf.max_iterations", 500));
    p.csf.convergence_delta = cfg.get_double("csf.convergence_delta", 0.005);

    const std::string stat = cfg.get_string("dem.stat", "mean");
    if (stat == "mean")
        p.dem_stat = DemStatistic::Mean;
    else if (stat == "min")
        p.dem_stat = DemStatistic::Min;
    else
        throw InputError("dem.stat must be mean or min, got '" + stat + "'");

    p.veg.ndi_min = cfg.get_double("veg.ndi_min", 0.0);
    p.veg.exb_max = cfg.get_double("veg.exb_max", 0.15);
    p.pseudo_depth.h_max = cfg.get_double("pseudo_depth.h_max", 50.0);
    p.ssim.window = static_cast<std::size_t>(cfg.get_int("ssim.window", 11));
    p.ssim.l = cfg.get_double("ssim.l", 50.0);
    p.tile_size = static_cast<std::size_t>(cfg.get_int("tiling.tile_size", 512));
    p.tile_max_nodata_fraction = cfg.get_double("tiling.max_nodata_fraction", 0.1);

    const auto stray = cfg.unused();
    if (!stray.empty())
        throw InputError("unknown config key '" + stray.begin()->first + "'");

    p.config_hash = cfg.hash();
    p.validate();
    return p;
}

void PipelineConfig::validate() const
{
    if (output_path.empty())
        throw InputError("output.path must be set");
    if (!(pixel_size > 0.0))
        throw InputError("grid.pixel_size must be positive");
    csf.validate();
    veg.validate();
    pseudo_depth.validate();
    ssim.validate();
    if (input_kind == InputKind::PointCloudUnclassified && rgb_path.empty())
        throw InputError("unclassified point cloud runs need input.rgb for structure masking");
    if (input_kind == InputKind::DsmDemPair && rgb_path.empty())
        throw InputError("dsm_dem_pair runs need input.rgb for structure masking");
}

namespace {

// Rethrows anything from a stage with the stage name attached.
template <typename F>
auto stage(std::vector<std::string>& log, const char* name, F&& body)
{
    log.push_back(name);
    try {
        return body();
    } catch (const InputError& e) {
        throw InputError(std::string("stage ") + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

// Clouds in geographic coordinates are projected to UTM up front so the
// grid's pixel size stays in meters.
PointCloud ensure_metric(const PointCloud& pc)
{
    if (pc.crs.kind != Crs::Kind::Geographic)
        return pc;
    double lon_sum = 0.0, lat_sum = 0.0;
    for (const auto& p : pc.points) {
        lon_sum += p.x;
        lat_sum += p.y;
    }
    const double lon_c = lon_sum / static_cast<double>(pc.points.size());
    const double lat_c = lat_sum / static_cast<double>(pc.points.size());
    const Crs utm = Crs::utm(utm_zone_from_lon(lon_c),
                             lat_c >= 0.0 ? Hemisphere::North : Hemisphere::South);
    PointCloud out;
    out.crs = utm;
    out.classified = pc.classified;
    out.points.reserve(pc.points.size());
    for (const auto& p : pc.points) {
        const UtmCoord c = utm_forward(p.y, p.x, utm.zone, utm.hemisphere);
        out.points.push_back(PointRecord{c.easting, c.northing, p.z, p.classification});
    }
    return out;
}

ChmRaster mask_structures(const ChmRaster& chm, const RgbImage& rgb, const VegThresholds& veg,
                          std::vector<std::string>& log)
{
    return stage(log, "remove_structures", [&] {
        VegMaskRaster mask = classify_vegetation(rgb, veg);
        if (!(mask.geom == chm.geom)) {
            if (!(mask.geom.crs == chm.geom.crs))
                throw InputError("RGB image and CHM must share a CRS for structure masking");
            mask = resample_mask_majority(mask, chm.geom);
        }
        return remove_structures(chm, mask);
    });
}

std::string manifest_text(const PipelineConfig& cfg, const std::vector<std::string>& stages,
                          const std::vector<std::string>& inputs)
{
    std::string out;
    out += "tool chmkit " + std::string(tool_version()) + "\n";
    out += "config_hash " + to_hex(cfg.config_hash) + "\n";

    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    out += "timestamp " + std::string(stamp) + "\n";

    for (const auto& path : inputs)
        out += "input " + path + " " + to_hex(fnv1a64(read_file_bytes(path))) + "\n";
    out += "output " + cfg.output_path + "\n";
    out += "stages";
    for (const auto& s : stages)
        out += " " + s;
    out += "\n";
    return out;
}

} // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg)
{
    cfg.validate();

    PipelineResult result;
    std::vector<std::string> inputs;
    std::vector<std::string> written;

    try {
        ChmRaster chm;
        switch (cfg.input_kind) {
        case InputKind::PointCloudClassified: {
            inputs.push_back(cfg.cloud_path);
            PointCloud cloud = stage(result.stages, "ingest", [&] {
                return ensure_metric(load_point_cloud(cfg.cloud_path, cfg.input_crs));
            });
            ClassSplit split = stage(result.stages, "split_by_class", [&] {
                return split_by_class(cloud);
            });
            const SurfacePair pair = stage(result.stages, "rasterize", [&] {
                PointCloud canopy = split.ground;
                canopy.points.insert(canopy.points.end(), split.vegetation.points.begin(),
                                     split.vegetation.points.end());
                PointCloud extent = canopy;
                extent.points.insert(extent.points.end(), split.excluded.points.begin(),
                                     split.excluded.points.end());
                const GridGeometry grid = grid_covering(extent, cfg.pixel_size);
                return rasterize_surfaces(split.ground, canopy, grid, cfg.dem_stat);
            });
            chm = stage(result.stages, "derive_chm", [&] { return derive_chm(pair); });
            break;
        }
        case InputKind::PointCloudUnclassified: {
            inputs.push_back(cfg.cloud_path);
            inputs.push_back(cfg.rgb_path);
            PointCloud cloud = stage(result.stages, "ingest", [&] {
                return ensure_metric(load_point_cloud(cfg.cloud_path, cfg.input_crs));
            });
            cloud = stage(result.stages, "remove_outliers", [&] {
                return remove_outliers(cloud, cfg.outlier_k, cfg.outlier_sigma_mult);
            });
            const GroundLabels labels = stage(result.stages, "csf_classify", [&] {
                return csf_classify(cloud, cfg.csf);
            });
            const SurfacePair pair = stage(result.stages, "rasterize", [&] {
                const LabelSplit split = split_by_labels(cloud, labels);
                const GridGeometry grid = grid_covering(cloud, cfg.pixel_size);
                return rasterize_surfaces(split.ground, cloud, grid, cfg.dem_stat);
            });
            chm = stage(result.stages, "derive_chm", [&] { return derive_chm(pair); });
            chm = mask_structures(chm, load_rgb(cfg.rgb_path), cfg.veg, result.stages);
            break;
        }
        case InputKind::DsmDemPair: {
            inputs.push_back(cfg.dsm_path);
            inputs.push_back(cfg.dem_path);
            inputs.push_back(cfg.rgb_path);
            const Raster dsm = stage(result.stages, "ingest", [&] {
                return load_raster(cfg.dsm_path, cfg.input_crs);
            });
            const Raster dem = load_raster(cfg.dem_path, cfg.input_crs);
            chm = stage(result.stages, "chm_from_products", [&] {
                return chm_from_products(dsm, dem);
            });
            chm = mask_structures(chm, load_rgb(cfg.rgb_path), cfg.veg, result.stages);
            break;
        }
        case InputKind::ChmProduct: {
            inputs.push_back(cfg.chm_path);
            chm = stage(result.stages, "ingest", [&] {
                return load_raster(cfg.chm_path, cfg.input_crs);
            });
            if (!cfg.rgb_path.empty()) {
                inputs.push_back(cfg.rgb_path);
                chm = mask_structures(chm, load_rgb(cfg.rgb_path), cfg.veg, result.stages);
            }
            break;
        }
        }

        if (!cfg.cloud_mask_path.empty()) {
            inputs.push_back(cfg.cloud_mask_path);
            chm = stage(result.stages, "apply_cloud_mask", [&] {
                return apply_cloud_mask(chm, load_raster(cfg.cloud_mask_path, cfg.input_crs));
            });
        }

        chm = stage(result.stages, "reproject", [&] {
            return reproject_to_utm(chm, cfg.pixel_size);
        });

        stage(result.stages, "write", [&]() -> int {
            store_raster(cfg.output_path, chm);
            written.push_back(cfg.output_path);
            const std::string manifest_path = cfg.output_path + ".manifest.txt";
            write_file_text(manifest_path, manifest_text(cfg, result.stages, inputs));
            written.push_back(manifest_path);
            result.manifest_path = manifest_path;
            return 0;
        });

        result.chm = std::move(chm);
        result.output_path = cfg.output_path;
        return result;
    } catch (...) {
        std::error_code ec;
        for (const auto& path : written)
            std::filesystem::remove(path, ec);
        throw;
    }
}

} // namespace chmkit
