#ifndef CHMKIT_METRICS_HPP
#define CHMKIT_METRICS_HPP

#include "chmkit/geo.hpp"

#include <map>
#include <string>
#include <vector>

namespace chmkit {

/// Co-located estimate/reference values drawn from cells valid in both
/// rasters.
struct PairedSamples {
    std::vector<double> estimates;
    std::vector<double> references;

    std::size_t size() const { return estimates.size(); }
    void validate() const;
};

PairedSamples paired_samples(const Raster& est, const Raster& ref);

/// Mean signed error; positive values mean overestimation.
double bias(const PairedSamples& s);
double mae(const PairedSamples& s);
double rmse(const PairedSamples& s);

/// SSIM configuration. C1 and C2 derive from K1/K2 and the dynamic range L
/// (50 m by default, the canopy height ceiling).
struct SsimParams {
    std::size_t window = 11; // odd, >= 3
    double k1 = 0.01;
    double k2 = 0.03;
    double l = 50.0;

    double c1() const { return (k1 * l) * (k1 * l); }
    double c2() const { return (k2 * l) * (k2 * l); }

    void validate() const;
};

/// Mean SSIM over all dense (stride 1) windows that are fully valid in both
/// rasters; window statistics use the population convention.
double ssim(const Raster& a, const Raster& b, const SsimParams& p = {});

struct HistogramBin {
    double lower;
    double upper;
    std::size_t count;
};

struct ErrorDistribution {
    std::map<double, double> frac_within; // half-width -> fraction of |err| <= w
    double frac_negative = 0.0;           // err < 0
    double frac_nonnegative = 0.0;        // err >= 0 (zeros count here)
    std::vector<HistogramBin> histogram;  // 1 m bins of est - ref
};

ErrorDistribution error_distribution(const PairedSamples& s, const std::vector<double>& half_widths);

struct MetricReport {
    double bias = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double ssim = 0.0;
    std::size_t n_valid = 0;
    ErrorDistribution distribution;
};

/// Full comparison of an estimated raster against a reference: bias, MAE,
/// RMSE, SSIM and the error distribution over jointly valid cells.
MetricReport compose_report(const Raster& est, const Raster& ref, const SsimParams& p = {},
                            const std::vector<double>& half_widths = {3.0, 5.0});

std::string report_to_text(const MetricReport& r);
std::string report_to_json(const MetricReport& r);

/// Fractions of each land cover class over cells where the mask is 1.
std::map<float, double> composition_analysis(const Raster& landcover, const Raster& sample_mask);

/// Histogram over strictly positive canopy heights; fractions are of the
/// positive-valued cell count. All-zero inputs yield an empty histogram.
struct ChmHistogram {
    double bin_width = 1.0;
    std::vector<HistogramBin> bins;
    std::size_t positive_count = 0;

    double fraction(std::size_t bin_index) const;
    /// Cumulative fraction of positive values below the given height.
    double cumulative_below(double height) const;
};

ChmHistogram chm_histogram(const Raster& chm, double bin_width);

} // namespace chmkit

#endif
