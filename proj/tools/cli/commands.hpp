#pragma once

#include <canopyforge/gradcheck.hpp>
#include <canopyforge/raster.hpp>
#include <canopyforge/stitching.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace canopyforge::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
    int threads = 1;
    std::uint64_t seed = 42;
};

struct MetricsOptions {
    fs::path input;
    fs::path out_dir;
    double cell = 1.0;
    double dz = 1.0;
    double k = 0.5;
    double max_height = 60.0;
    std::vector<double> percentiles{5.0, 50.0, 95.0};
    int ground_neighbors = 8;
    double idw_power = 2.0;
    std::string fhd_basis = "pad";
    int crs = kDefaultCrs;
    bool write_pad = true;
};

struct ResampleOptions {
    fs::path input;
    fs::path output;
    double target_cell = 0.2;
    std::string method = "bilinear";
};

struct AlignOptions {
    fs::path input;
    fs::path reference;
    fs::path output;
};

struct PatchifyOptions {
    std::vector<fs::path> inputs;
    fs::path out_dir;
    std::string tile_id = "tile";
    std::int64_t patch = 224;
    std::int64_t stride = 224;
    double min_valid = 0.5;
    fs::path pad;
    int pad_factor = 4;
};

struct EvaluateOptions {
    std::vector<fs::path> preds;
    std::vector<fs::path> refs;
    double threshold = 2.0;
    std::string format = "json";
    fs::path output; ///< empty: write to the command's output stream
};

struct StitchOptions {
    fs::path windows_dir;
    fs::path plan; ///< optional "row0,col0" CSV; otherwise planned from height/width
    fs::path output;
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::int64_t window = 224;
    std::int64_t overlap = 32;
    std::string blend = "hann";
    std::string band = "chm";
};

struct LosscheckOptions {
    double eps = 1e-6;
    std::size_t samples = 64;
    double tolerance = 1e-4;
};

struct DensityOptions {
    fs::path input;
};

void run_metrics(const MetricsOptions& o, const GlobalOptions& g, std::ostream& log);
void run_resample(const ResampleOptions& o, const GlobalOptions& g, std::ostream& log);
void run_align(const AlignOptions& o, const GlobalOptions& g, std::ostream& log);
void run_patchify(const PatchifyOptions& o, const GlobalOptions& g, std::ostream& log);
void run_evaluate(const EvaluateOptions& o, const GlobalOptions& g, std::ostream& out);
void run_stitch(const StitchOptions& o, const GlobalOptions& g, std::ostream& log);
void run_density(const DensityOptions& o, std::ostream& out);

/// Prints one row per case and returns 0 when every error is below the
/// tolerance, 1 otherwise.
int run_losscheck(const std::vector<GradCheckCase>& cases, const LosscheckOptions& o, const GlobalOptions& g,
                  std::ostream& out);
int run_losscheck(const LosscheckOptions& o, const GlobalOptions& g, std::ostream& out);

/// Window prediction file name for a plan offset: "win_<row0>_<col0>".
std::string window_file_stem(const CellIndex& w);

} // namespace canopyforge::cli
