#include "chmkit/metrics.hpp"

#include "chmkit/error.hpp"
#include "chmkit/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace chmkit {

void PairedSamples::validate() const
{
    if (estimates.size() != references.size())
        throw InputError("paired samples must have equal lengths");
    if (estimates.empty())
        throw InputError("paired samples are empty");
}

PairedSamples paired_samples(const Raster& est, const Raster& ref)
{
    est.validate();
    ref.validate();
    if (!(est.geom == ref.geom))
        throw InputError("paired sampling requires identical grid geometries");

    PairedSamples s;
    for (std::size_t i = 0; i < est.values.size(); ++i) {
        if (est.values[i] == est.nodata || ref.values[i] == ref.nodata)
            continue;
        s.estimates.push_back(est.values[i]);
        s.references.push_back(ref.values[i]);
    }
    if (s.estimates.empty())
        throw InputError("no jointly valid cells between the rasters");
    return s;
}

double bias(const PairedSamples& s)
{
    s.validate();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        sum += s.estimates[i] - s.references[i];
    return sum / static_cast<double>(s.size());
}

double mae(const PairedSamples& s)
{
    s.validate();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        sum += std::fabs(s.estimates[i] - s.references[i]);
    return sum / static_cast<double>(s.size());
}

double rmse(const PairedSamples& s)
{
    s.validate();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = s.estimates[i] - s.references[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(s.size()));
}

void SsimParams::validate() const
{
    if (window < 3 || window % 2 == 0)
        throw InputError("SSIM window must be odd and at least 3");
    if (!(l > 0.0))
        throw InputError("SSIM dynamic range L must be positive");
}

double ssim(const Raster& a, const Raster& b, const SsimParams& p)
{
    a.validate();
    b.validate();
    p.validate();
    if (!(a.geom == b.geom))
        throw InputError("SSIM requires identical grid geometries");

    const std::size_t rows = a.geom.rows, cols = a.geom.cols, w = p.window;
    if (rows < w || cols < w)
        throw InputError("SSIM found no fully valid window");

    const std::size_t out_rows = rows - w + 1;
    const std::size_t out_cols = cols - w + 1;
    const double c1 = p.c1();
    const double c2 = p.c2();
    const double n_win = static_cast<double>(w) * static_cast<double>(w);

    // Per-window values land in a dense buffer (NaN = skipped) so the final
    // reduction is a fixed-order sequential sum regardless of thread count.
    std::vector<double> window_ssim(out_rows * out_cols,
                                    std::numeric_limits<double>::quiet_NaN());

    parallel_chunks(out_rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t wr = begin; wr < end; ++wr) {
            for (std::size_t wc = 0; wc < out_cols; ++wc) {
                double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
                bool complete = true;
                for (std::size_t r = wr; r < wr + w && complete; ++r) {
                    for (std::size_t c = wc; c < wc + w; ++c) {
                        const float va = a.at(r, c);
                        const float vb = b.at(r, c);
                        if (va == a.nodata || vb == b.nodata) {
                            complete = false;
                            break;
                        }
                        const double x = va, y = vb;
                        sum_a += x;
                        sum_b += y;
                        sum_aa += x * x;
                        sum_bb += y * y;
                        sum_ab += x * y;
                    }
                }
                if (!complete)
                    continue;
                const double mu_a = sum_a / n_win;
                const double mu_b = sum_b / n_win;
                const double var_a = sum_aa / n_win - mu_a * mu_a;
                const double var_b = sum_bb / n_win - mu_b * mu_b;
                const double cov = sum_ab / n_win - mu_a * mu_b;
                window_ssim[wr * out_cols + wc] =
                    (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            }
        }
    });

    double sum = 0.0;
    std::size_t n = 0;
    for (double v : window_ssim) {
        if (!std::isnan(v)) {
            sum += v;
            ++n;
        }
    }
    if (n == 0)
        throw InputError("SSIM found no fully valid window");
    return sum / static_cast<double>(n);
}

ErrorDistribution error_distribution(const PairedSamples& s, const std::vector<double>& half_widths)
{
    s.validate();
    const double n = static_cast<double>(s.size());

    ErrorDistribution out;
    std::map<long long, std::size_t> bins;
    std::size_t negative = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = s.estimates[i] - s.references[i];
        if (e < 0.0)
            ++negative;
        ++bins[static_cast<long long>(std::floor(e))];
    }
    for (double w : half_widths) {
        std::size_t within = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (std::fabs(s.estimates[i] - s.references[i]) <= w)
                ++within;
        out.frac_within[w] = static_cast<double>(within) / n;
    }
    out.frac_negative = static_cast<double>(negative) / n;
    out.frac_nonnegative = static_cast<double>(s.size() - negative) / n;
    for (const auto& [lower, count] : bins)
        out.histogram.push_back(HistogramBin{static_cast<double>(lower),
                                             static_cast<double>(lower) + 1.0, count});
    return out;
}

MetricReport compose_report(const Raster& est, const Raster& ref, const SsimParams& p,
                            const std::vector<double>& half_widths)
{
    const PairedSamples s = paired_samples(est, ref);
    MetricReport r;
    r.bias = bias(s);
    r.mae = mae(s);
    r.rmse = rmse(s);
    r.ssim = ssim(est, ref, p);
    r.n_valid = s.size();
    r.distribution = error_distribution(s, half_widths);
    return r;
}

std::string report_to_text(const MetricReport& r)
{
    std::string out;
    out += "bias " + format_double(r.bias) + "\n";
    out += "mae " + format_double(r.mae) + "\n";
    out += "rmse " + format_double(r.rmse) + "\n";
    out += "ssim " + format_double(r.ssim) + "\n";
    out += "n_valid " + std::to_string(r.n_valid) + "\n";
    for (const auto& [w, frac] : r.distribution.frac_within)
        out += "frac_within_" + format_double(w) + " " + format_double(frac) + "\n";
    out += "frac_negative " + format_double(r.distribution.frac_negative) + "\n";
    out += "frac_nonnegative " + format_double(r.distribution.frac_nonnegative) + "\n";
    out += "histogram\n";
    for (const auto& bin : r.distribution.histogram)
        out += format_double(bin.lower) + "," + format_double(bin.upper) + ","
             + std::to_string(bin.count) + "\n";
    return out;
}

std::string report_to_json(const MetricReport& r)
{
    nlohmann::json j;
    j["bias"] = r.bias;
    j["mae"] = r.mae;
    j["rmse"] = r.rmse;
    j["ssim"] = r.ssim;
    j["n_valid"] = r.n_valid;
    nlohmann::json fw = nlohmann::json::object();
    for (const auto& [w, frac] : r.distribution.frac_within)
        fw[format_double(w)] = frac;
    j["frac_within"] = fw;
    j["frac_negative"] = r.distribution.frac_negative;
    j["frac_nonnegative"] = r.distribution.frac_nonnegative;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& bin : r.distribution.histogram)
        hist.push_back({{"lower", bin.lower}, {"upper", bin.upper}, {"count", bin.count}});
    j["histogram"] = hist;
    return j.dump(2) + "\n";
}

std::map<float, double> composition_analysis(const Raster& landcover, const Raster& sample_mask)
{
    landcover.validate();
    sample_mask.validate();
    if (!(landcover.geom == sample_mask.geom))
        throw InputError("composition analysis requires aligned geometries");

    std::map<float, std::size_t> counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i < landcover.values.size(); ++i) {
        if (sample_mask.values[i] == sample_mask.nodata || sample_mask.values[i] != 1.0f)
            continue;
        if (landcover.values[i] == landcover.nodata)
            continue;
        ++counts[landcover.values[i]];
        ++total;
    }
    if (total == 0)
        throw InputError("composition analysis mask selects no valid cells");

    std::map<float, double> fractions;
    for (const auto& [cls, count] : counts)
        fractions[cls] = static_cast<double>(count) / static_cast<double>(total);
    return fractions;
}

double ChmHistogram::fraction(std::size_t bin_index) const
{
    if (positive_count == 0 || bin_index >= bins.size())
        return 0.0;
    return static_cast<double>(bins[bin_index].count) / static_cast<double>(positive_count);
}

double ChmHistogram::cumulative_below(double height) const
{
    if (positive_count == 0)
        return 0.0;
    std::size_t n = 0;
    for (const auto& bin : bins)
        if (bin.upper <= height)
            n += bin.count;
    return static_cast<double>(n) / static_cast<double>(positive_count);
}

ChmHistogram chm_histogram(const Raster& chm, double bin_width)
{
    chm.validate();
    if (!(bin_width > 0.0))
        throw InputError("histogram bin width must be positive");

    std::map<long long, std::size_t> bins;
    std::size_t total = 0;
    for (float v : chm.values) {
        if (v == chm.nodata || !(v > 0.0f))
            continue;
        ++bins[static_cast<long long>(std::floor(static_cast<double>(v) / bin_width))];
        ++total;
    }

    ChmHistogram out;
    out.bin_width = bin_width;
    out.positive_count = total;
    for (const auto& [idx, count] : bins)
        out.bins.push_back(HistogramBin{static_cast<double>(idx) * bin_width,
                                        (static_cast<double>(idx) + 1.0) * bin_width, count});
    return out;
}

} // namespace chmkit
