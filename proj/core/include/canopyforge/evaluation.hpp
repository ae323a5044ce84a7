#pragma once

#include "canopyforge/raster.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace canopyforge {

/// Statistics of one band. NaN marks an undefined value (e.g. R^2 of a
/// constant reference, IoU with an empty union).
struct BandStats {
    double mae = 0.0;
    double rmse = 0.0;
    double medae = 0.0;
    double bias = 0.0;
    double r2 = 0.0;
    double pearson_r = 0.0;
    double rmae_percent = 0.0;
    double iou = 0.0;
    double f1 = 0.0;
    std::size_t n_valid = 0;
};

inline constexpr std::array<const char*, 9> kStatNames = {
    "mae", "rmse", "medae", "bias", "r2", "pearson_r", "rmae_percent", "iou", "f1"};

double stat_value(const BandStats& s, std::size_t i);
double& stat_value(BandStats& s, std::size_t i);

struct TileStats {
    std::string tile_id;
    std::map<std::string, BandStats> bands;
};

struct EvalReport {
    double threshold_m = 2.0;
    std::map<std::string, BandStats> bands;
    std::map<std::string, BandStats> spread; ///< sample std across tiles; empty for single evaluations
    std::size_t n_tiles = 1;
    std::vector<TileStats> tiles;
};

/// Statistics over paired values. Requires equal lengths and >= 2 pairs.
BandStats compute_band_stats(std::span<const double> pred, std::span<const double> ref, double threshold_m);

/// Compares `pred` with `ref` over pixels that are valid in the mask and in
/// both rasters. The band is named after `ref` (or "value").
EvalReport evaluate(const MetricRaster& pred, const MetricRaster& ref, const MaskRaster& mask,
                    double threshold_m = 2.0);

/// Adds the bands of `other` to `into`; thresholds must agree.
void merge_bands(EvalReport& into, const EvalReport& other);

/// Unweighted mean and sample standard deviation per statistic across
/// reports, skipping undefined values; n_valid is summed.
EvalReport aggregate_tiles(const std::vector<EvalReport>& reports, const std::vector<std::string>& tile_ids = {});

void write_report_json(const EvalReport& r, std::ostream& out);
EvalReport read_report_json(std::istream& in);

/// "band,metric,value" rows: the nine statistics plus n_valid per band.
void write_report_csv(const EvalReport& r, std::ostream& out);

} // namespace canopyforge
