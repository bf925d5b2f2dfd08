#ifndef CHMKIT_PIPELINE_HPP
#define CHMKIT_PIPELINE_HPP

#include "chmkit/config.hpp"
#include "chmkit/csf.hpp"
#include "chmkit/dataset.hpp"
#include "chmkit/metrics.hpp"
#include "chmkit/surface.hpp"
#include "chmkit/vegmask.hpp"

#include <string>
#include <vector>

namespace chmkit {

enum class InputKind { PointCloudClassified, PointCloudUnclassified, DsmDemPair, ChmProduct };

/// Everything one batch run needs. All tunables (CSF parameters, vegetation
/// thresholds, SSIM dynamic range) live here so runs are reproducible from
/// the config file alone.
struct PipelineConfig {
    InputKind input_kind = InputKind::ChmProduct;

    std::string cloud_path;   // point cloud branches
    std::string dsm_path;     // dsm_dem_pair
    std::string dem_path;
    std::string chm_path;     // chm_product
    std::string rgb_path;     // PPM + .geo sidecar; structure masking
    std::string cloud_mask_path;
    std::string output_path;

    Crs input_crs = Crs::wgs84(); // applied to formats without CRS metadata
    double pixel_size = 3.0;

    std::size_t outlier_k = 8;
    double outlier_sigma_mult = 3.0;
    CsfParams csf;
    DemStatistic dem_stat = DemStatistic::Mean;
    VegThresholds veg;
    PseudoDepthConfig pseudo_depth;
    SsimParams ssim;
    std::size_t tile_size = 512;
    double tile_max_nodata_fraction = 0.1;

    std::uint64_t config_hash = 0;

    static PipelineConfig from_config(const Config& cfg);
    void validate() const;
};

struct PipelineResult {
    ChmRaster chm;
    std::string output_path;
    std::string manifest_path;
    std::vector<std::string> stages;
};

/// Dispatches on input kind, writes the CHM and a run manifest (config
/// hash, input checksums, tool version; the timestamp is the only
/// non-deterministic field). Partial outputs are removed on failure and
/// errors carry the failing stage's name.
PipelineResult run_pipeline(const PipelineConfig& cfg);

const char* tool_version();

} // namespace chmkit

#endif
