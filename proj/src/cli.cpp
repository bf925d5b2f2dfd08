#include "chmkit/cli.hpp"

#include "chmkit/error.hpp"
#include "chmkit/pipeline.hpp"
#include "chmkit/util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>

namespace chmkit {

namespace {

std::string lower_ext(const std::string& path)
{
    std::string ext = std::filesystem::path(path).extension().string();
    for (auto& c : ext)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

struct CliState {
    std::ostream& out;
    std::ostream& err;
    std::function<void()> action;
};

void add_select_image(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("select-image", "Pick the best acquisition from a metadata table");
    auto table = std::make_shared<std::string>();
    auto year = std::make_shared<int>(0);
    auto hemi = std::make_shared<std::string>("north");
    cmd->add_option("table", *table, "tab-separated metadata table")->required();
    cmd->add_option("--year", *year, "target acquisition year")->required();
    cmd->add_option("--hemisphere", *hemi, "north or south")
        ->check(CLI::IsMember({"north", "south"}));
    cmd->callback([&state, table, year, hemi] {
        state.action = [&state, table, year, hemi] {
            const Hemisphere want = *hemi == "south" ? Hemisphere::South : Hemisphere::North;
            std::vector<ImageMeta> all = read_image_meta_table(read_file_text(*table));
            std::vector<ImageMeta> candidates;
            for (auto& m : all)
                if (m.hemisphere == want)
                    candidates.push_back(std::move(m));
            SelectionCriteria criteria;
            criteria.year = *year;
            const auto chosen = select_image(candidates, criteria);
            state.out << (chosen ? chosen->id : std::string("NONE")) << "\n";
        };
    });
}

void add_ingest(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("ingest", "Read a point cloud and write it as normalized text");
    auto in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    cmd->add_option("input", *in, "point cloud (.las or text)")->required();
    cmd->add_option("-o,--output", *out_path, "output text cloud")->required();
    cmd->add_option("--crs", *crs, "CRS of the input (wgs84 or utm:<zone>:<N|S>)");
    cmd->callback([&state, in, out_path, crs] {
        state.action = [&state, in, out_path, crs] {
            const PointCloud pc = load_point_cloud(*in, Crs::parse(*crs));
            write_file_text(*out_path, write_point_text(pc));
            state.out << pc.size() << " points (" << (pc.classified ? "classified" : "unclassified")
                      << ")\n";
        };
    });
}

void add_denoise(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("denoise", "Statistical outlier removal");
    auto in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto k = std::make_shared<std::size_t>(8);
    auto sigma = std::make_shared<double>(3.0);
    cmd->add_option("input", *in)->required();
    cmd->add_option("-o,--output", *out_path)->required();
    cmd->add_option("--crs", *crs);
    cmd->add_option("--k", *k, "neighbor count");
    cmd->add_option("--sigma", *sigma, "std-dev multiplier");
    cmd->callback([&state, in, out_path, crs, k, sigma] {
        state.action = [&state, in, out_path, crs, k, sigma] {
            const PointCloud pc = load_point_cloud(*in, Crs::parse(*crs));
            const PointCloud kept = remove_outliers(pc, *k, *sigma);
            write_file_text(*out_path, write_point_text(kept));
            state.out << "kept " << kept.size() << " of " << pc.size() << " points\n";
        };
    });
}

void add_csf(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("csf", "Cloth simulation ground filtering");
    auto in = std::make_shared<std::string>();
    auto ground_path = std::make_shared<std::string>();
    auto nonground_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto params = std::make_shared<CsfParams>();
    cmd->add_option("input", *in)->required();
    cmd->add_option("--ground", *ground_path, "output for ground points")->required();
    cmd->add_option("--nonground", *nonground_path, "output for non-ground points");
    cmd->add_option("--crs", *crs);
    cmd->add_option("--resolution", params->cloth_resolution, "cloth resolution (m)");
    cmd->add_option("--rigidness", params->rigidness)->check(CLI::Range(1, 3));
    cmd->add_option("--time-step", params->time_step);
    cmd->add_option("--threshold", params->class_threshold, "ground distance threshold (m)");
    cmd->add_option("--max-iterations", params->max_iterations);
    cmd->add_option("--convergence", params->convergence_delta);
    cmd->callback([&state, in, ground_path, nonground_path, crs, params] {
        state.action = [&state, in, ground_path, nonground_path, crs, params] {
            const PointCloud pc = load_point_cloud(*in, Crs::parse(*crs));
            const GroundLabels labels = csf_classify(pc, *params);
            const LabelSplit split = split_by_labels(pc, labels);
            write_file_text(*ground_path, write_point_text(split.ground));
            if (!nonground_path->empty())
                write_file_text(*nonground_path, write_point_text(split.non_ground));
            state.out << "ground " << split.ground.size() << ", non-ground "
                      << split.non_ground.size() << "\n";
        };
    });
}

void add_rasterize(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("rasterize", "Grid ground/canopy points into DEM and DSM");
    auto cloud = std::make_shared<std::string>();
    auto ground = std::make_shared<std::string>();
    auto canopy = std::make_shared<std::string>();
    auto dem_path = std::make_shared<std::string>();
    auto dsm_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto pixel = std::make_shared<double>(3.0);
    auto stat = std::make_shared<std::string>("mean");
    cmd->add_option("--cloud", *cloud, "classified cloud (split internally)");
    cmd->add_option("--ground", *ground, "ground cloud (with --canopy)");
    cmd->add_option("--canopy", *canopy, "canopy cloud (with --ground)");
    cmd->add_option("--dem", *dem_path, "DEM output")->required();
    cmd->add_option("--dsm", *dsm_path, "DSM output")->required();
    cmd->add_option("--crs", *crs);
    cmd->add_option("--pixel-size", *pixel);
    cmd->add_option("--dem-stat", *stat)->check(CLI::IsMember({"mean", "min"}));
    cmd->callback([&state, cloud, ground, canopy, dem_path, dsm_path, crs, pixel, stat] {
        state.action = [&state, cloud, ground, canopy, dem_path, dsm_path, crs, pixel, stat] {
            const Crs c = Crs::parse(*crs);
            const DemStatistic dem_stat = *stat == "min" ? DemStatistic::Min : DemStatistic::Mean;
            PointCloud ground_pc, canopy_pc;
            GridGeometry grid;
            if (!cloud->empty()) {
                const PointCloud pc = load_point_cloud(*cloud, c);
                const ClassSplit split = split_by_class(pc);
                ground_pc = split.ground;
                canopy_pc = split.ground;
                canopy_pc.points.insert(canopy_pc.points.end(), split.vegetation.points.begin(),
                                        split.vegetation.points.end());
                grid = grid_covering(pc, *pixel);
            } else if (!ground->empty() && !canopy->empty()) {
                ground_pc = load_point_cloud(*ground, c);
                canopy_pc = load_point_cloud(*canopy, c);
                PointCloud extent = ground_pc;
                extent.points.insert(extent.points.end(), canopy_pc.points.begin(),
                                     canopy_pc.points.end());
                grid = grid_covering(extent, *pixel);
            } else {
                throw InputError("rasterize needs --cloud or both --ground and --canopy");
            }
            const SurfacePair pair = rasterize_surfaces(ground_pc, canopy_pc, grid, dem_stat);
            store_raster(*dem_path, pair.dem);
            store_raster(*dsm_path, pair.dsm);
            state.out << "grid " << grid.cols << "x" << grid.rows << " at "
                      << format_double(grid.pixel_size) << " m\n";
        };
    });
}

void add_gapfill(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("gapfill", "Fill raster gaps by cubic splines");
    auto in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    cmd->add_option("input", *in)->required();
    cmd->add_option("-o,--output", *out_path)->required();
    cmd->add_option("--crs", *crs, "CRS for .asc inputs");
    cmd->callback([&state, in, out_path, crs] {
        state.action = [in, out_path, crs] {
            store_raster(*out_path, fill_gaps_spline(load_raster(*in, Crs::parse(*crs))));
        };
    });
}

void add_chm(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("chm", "CHM = DSM - DEM, clamped at zero");
    auto dsm = std::make_shared<std::string>();
    auto dem = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    cmd->add_option("--dsm", *dsm)->required();
    cmd->add_option("--dem", *dem)->required();
    cmd->add_option("-o,--output", *out_path)->required();
    cmd->add_option("--crs", *crs, "CRS for .asc inputs");
    cmd->callback([&state, dsm, dem, out_path, crs] {
        state.action = [dsm, dem, out_path, crs] {
            const Crs c = Crs::parse(*crs);
            store_raster(*out_path, chm_from_products(load_raster(*dsm, c), load_raster(*dem, c)));
        };
    });
}

void add_mask(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("mask", "Zero structures via RGB indices or apply a cloud mask");
    auto in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto rgb = std::make_shared<std::string>();
    auto cloud_mask = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto ndi_min = std::make_shared<double>(0.0);
    auto exb_max = std::make_shared<double>(0.15);
    cmd->add_option("input", *in, "CHM raster")->required();
    cmd->add_option("-o,--output", *out_path)->required();
    cmd->add_option("--rgb", *rgb, "PPM image for vegetation masking");
    cmd->add_option("--cloud-mask", *cloud_mask, "raster with 1 = cloud");
    cmd->add_option("--crs", *crs);
    cmd->add_option("--ndi-min", *ndi_min);
    cmd->add_option("--exb-max", *exb_max);
    cmd->callback([&state, in, out_path, rgb, cloud_mask, crs, ndi_min, exb_max] {
        state.action = [in, out_path, rgb, cloud_mask, crs, ndi_min, exb_max] {
            const Crs c = Crs::parse(*crs);
            Raster chm = load_raster(*in, c);
            if (rgb->empty() && cloud_mask->empty())
                throw InputError("mask needs --rgb or --cloud-mask");
            if (!rgb->empty()) {
                VegThresholds t;
                t.ndi_min = *ndi_min;
                t.exb_max = *exb_max;
                VegMaskRaster mask = classify_vegetation(load_rgb(*rgb), t);
                if (!(mask.geom == chm.geom)) {
                    if (!(mask.geom.crs == chm.geom.crs))
                        throw InputError("RGB image and CHM must share a CRS");
                    mask = resample_mask_majority(mask, chm.geom);
                }
                chm = remove_structures(chm, mask);
            }
            if (!cloud_mask->empty())
                chm = apply_cloud_mask(chm, load_raster(*cloud_mask, c));
            store_raster(*out_path, chm);
        };
    });
}

void add_reproject(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("reproject", "Reproject a raster or PPM to UTM");
    auto in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto pixel = std::make_shared<double>(3.0);
    cmd->add_option("input", *in)->required();
    cmd->add_option("-o,--output", *out_path)->required();
    cmd->add_option("--pixel-size", *pixel);
    cmd->add_option("--crs", *crs, "CRS for .asc inputs");
    cmd->callback([&state, in, out_path, crs, pixel] {
        state.action = [in, out_path, crs, pixel] {
            if (lower_ext(*in) == ".ppm") {
                store_rgb(*out_path, reproject_to_utm(load_rgb(*in), *pixel));
            } else {
                store_raster(*out_path, reproject_to_utm(load_raster(*in, Crs::parse(*crs)), *pixel));
            }
        };
    });
}

void add_resample(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("resample", "Aggregate a raster onto a coarser grid");
    auto in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto pixel = std::make_shared<double>(3.0);
    auto method = std::make_shared<std::string>("max");
    cmd->add_option("input", *in)->required();
    cmd->add_option("-o,--output", *out_path)->required();
    cmd->add_option("--pixel-size", *pixel)->required();
    cmd->add_option("--method", *method)->check(CLI::IsMember({"max", "mean"}));
    cmd->add_option("--crs", *crs, "CRS for .asc inputs");
    cmd->callback([&state, in, out_path, crs, pixel, method] {
        state.action = [in, out_path, crs, pixel, method] {
            const Raster src = load_raster(*in, Crs::parse(*crs));
            const GridGeometry target = coarsened_grid(src.geom, *pixel);
            store_raster(*out_path, *method == "mean" ? resample_mean(src, target)
                                                      : resample_max(src, target));
        };
    });
}

void add_pseudodepth(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("pseudodepth", "CHM <-> pseudo-depth transform");
    auto in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto hmax = std::make_shared<double>(50.0);
    auto invert = std::make_shared<bool>(false);
    cmd->add_option("input", *in)->required();
    cmd->add_option("-o,--output", *out_path)->required();
    cmd->add_option("--hmax", *hmax, "height ceiling (m)");
    cmd->add_flag("--invert", *invert, "depth back to CHM");
    cmd->add_option("--crs", *crs, "CRS for .asc inputs");
    cmd->callback([&state, in, out_path, crs, hmax, invert] {
        state.action = [&state, in, out_path, crs, hmax, invert] {
            PseudoDepthConfig cfg;
            cfg.h_max = *hmax;
            const Raster src = load_raster(*in, Crs::parse(*crs));
            if (*invert) {
                store_raster(*out_path, from_pseudo_depth(src, cfg));
            } else {
                const PseudoDepthResult r = to_pseudo_depth(src, cfg);
                if (r.clamped > 0)
                    state.err << "warning: clamped " << r.clamped
                              << " cells above " << format_double(cfg.h_max) << " m\n";
                store_raster(*out_path, r.depth);
            }
        };
    });
}

void add_tile(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("tile", "Cut aligned RGB/label grids into training tiles");
    auto rgb = std::make_shared<std::string>();
    auto label = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto tile_size = std::make_shared<std::size_t>(512);
    auto max_nodata = std::make_shared<double>(0.1);
    cmd->add_option("--rgb", *rgb, "PPM image")->required();
    cmd->add_option("--label", *label, "label raster")->required();
    cmd->add_option("--out-dir", *out_dir)->required();
    cmd->add_option("--tile-size", *tile_size);
    cmd->add_option("--max-nodata", *max_nodata);
    cmd->add_option("--crs", *crs, "CRS for .asc labels");
    cmd->callback([&state, rgb, label, out_dir, crs, tile_size, max_nodata] {
        state.action = [&state, rgb, label, out_dir, crs, tile_size, max_nodata] {
            const TileManifest manifest = export_tiles(load_rgb(*rgb),
                                                       load_raster(*label, Crs::parse(*crs)),
                                                       *tile_size, *max_nodata, *out_dir);
            state.out << manifest.entries.size() << " tiles\n";
        };
    });
}

void add_eval(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("eval", "Compare an estimated raster against a reference");
    auto est = std::make_shared<std::string>();
    auto ref = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto out_path = std::make_shared<std::string>();
    auto json_path = std::make_shared<std::string>();
    auto window = std::make_shared<std::size_t>(11);
    auto range = std::make_shared<double>(50.0);
    auto widths = std::make_shared<std::vector<double>>(std::vector<double>{3.0, 5.0});
    cmd->add_option("estimate", *est)->required();
    cmd->add_option("reference", *ref)->required();
    cmd->add_option("--window", *window, "SSIM window (odd)");
    cmd->add_option("--range", *range, "SSIM dynamic range L (m)");
    cmd->add_option("--within", *widths, "error half-widths for frac_within");
    cmd->add_option("--out", *out_path, "also write the text report here");
    cmd->add_option("--json", *json_path, "also write a JSON report here");
    cmd->add_option("--crs", *crs, "CRS for .asc inputs");
    cmd->callback([&state, est, ref, crs, out_path, json_path, window, range, widths] {
        state.action = [&state, est, ref, crs, out_path, json_path, window, range, widths] {
            const Crs c = Crs::parse(*crs);
            SsimParams p;
            p.window = *window;
            p.l = *range;
            const MetricReport report =
                compose_report(load_raster(*est, c), load_raster(*ref, c), p, *widths);
            const std::string text = report_to_text(report);
            state.out << text;
            if (!out_path->empty())
                write_file_text(*out_path, text);
            if (!json_path->empty())
                write_file_text(*json_path, report_to_json(report));
        };
    });
}

void add_report(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("report", "Composition and height-distribution summaries");
    auto landcover = std::make_shared<std::string>();
    auto mask = std::make_shared<std::string>();
    auto chm = std::make_shared<std::string>();
    auto crs = std::make_shared<std::string>("wgs84");
    auto bin_width = std::make_shared<double>(1.0);
    cmd->add_option("--landcover", *landcover, "land cover raster (with --mask)");
    cmd->add_option("--mask", *mask, "sample mask raster, 1 = sampled");
    cmd->add_option("--chm", *chm, "CHM for the height histogram");
    cmd->add_option("--bin-width", *bin_width);
    cmd->add_option("--crs", *crs, "CRS for .asc inputs");
    cmd->callback([&state, landcover, mask, chm, crs, bin_width] {
        state.action = [&state, landcover, mask, chm, crs, bin_width] {
            const Crs c = Crs::parse(*crs);
            bool did_anything = false;
            if (!landcover->empty() || !mask->empty()) {
                if (landcover->empty() || mask->empty())
                    throw InputError("composition analysis needs both --landcover and --mask");
                const auto fractions =
                    composition_analysis(load_raster(*landcover, c), load_raster(*mask, c));
                for (const auto& [cls, frac] : fractions)
                    state.out << "class " << format_float(cls) << " " << format_double(frac) << "\n";
                did_anything = true;
            }
            if (!chm->empty()) {
                const ChmHistogram hist = chm_histogram(load_raster(*chm, c), *bin_width);
                state.out << "positive_cells " << hist.positive_count << "\n";
                for (const auto& bin : hist.bins)
                    state.out << format_double(bin.lower) << "," << format_double(bin.upper) << ","
                              << bin.count << "\n";
                did_anything = true;
            }
            if (!did_anything)
                throw InputError("report needs --landcover/--mask or --chm");
        };
    });
}

void add_run(CLI::App& app, CliState& state)
{
    auto* cmd = app.add_subcommand("run", "Run a full pipeline from a config file");
    auto config_path = std::make_shared<std::string>();
    cmd->add_option("--config", *config_path, "pipeline config file")->required();
    cmd->callback([&state, config_path] {
        state.action = [&state, config_path] {
            const PipelineConfig cfg =
                PipelineConfig::from_config(Config::parse(read_file_text(*config_path)));
            const PipelineResult result = run_pipeline(cfg);
            state.out << "wrote " << result.output_path << " ("
                      << result.chm.geom.cols << "x" << result.chm.geom.rows << " at "
                      << format_double(result.chm.geom.pixel_size) << " m, "
                      << result.chm.geom.crs.to_string() << ")\n";
        };
    });
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"chmkit - canopy height model toolkit"};
    app.set_version_flag("--version", std::string("chmkit ") + tool_version());
    app.require_subcommand(0, 1);

    unsigned threads = 1;
    app.add_option("--threads", threads, "worker thread cap");

    CliState state{out, err, {}};
    add_select_image(app, state);
    add_ingest(app, state);
    add_denoise(app, state);
    add_csf(app, state);
    add_rasterize(app, state);
    add_gapfill(app, state);
    add_chm(app, state);
    add_mask(app, state);
    add_reproject(app, state);
    add_resample(app, state);
    add_pseudodepth(app, state);
    add_tile(app, state);
    add_eval(app, state);
    add_report(app, state);
    add_run(app, state);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << e.what() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    if (!state.action) {
        out << app.help();
        return 0;
    }

    set_max_threads(threads);
    try {
        state.action();
        return 0;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace chmkit
