#include "cli/app.hpp"

#include "cli/commands.hpp"

#include <canopyforge/error.hpp>
#include <canopyforge/parallel.hpp>

#include <CLI11.hpp>

#include <ostream>

namespace canopyforge::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitPrecondition = 3;

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"canopyforge: LiDAR canopy-structure rasters, distillation losses and evaluation"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    GlobalOptions global;
    global.threads = default_thread_count();
    app.add_option("--threads", global.threads, "Worker threads")
        ->envname("CANOPYFORGE_THREADS")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", global.seed, "Seed for all sampled randomness");

    MetricsOptions metrics;
    auto* m = app.add_subcommand("metrics", "Point cloud -> CHM, PAI, FHD and height percentile rasters");
    m->add_option("input", metrics.input, "LAS or XYZ point cloud")->required();
    m->add_option("-o,--out", metrics.out_dir, "Output directory")->required();
    m->add_option("--cell", metrics.cell, "Grid cell size (m)");
    m->add_option("--dz", metrics.dz, "PAD layer thickness (m)");
    m->add_option("--k", metrics.k, "Beer-Lambert extinction coefficient");
    m->add_option("--max-height", metrics.max_height, "HAG cap (m)");
    m->add_option("--percentiles", metrics.percentiles, "Height percentiles")->delimiter(',');
    m->add_option("--ground-neighbors", metrics.ground_neighbors, "IDW neighbours for ground fill");
    m->add_option("--idw-power", metrics.idw_power, "IDW power for ground fill");
    m->add_option("--fhd-basis", metrics.fhd_basis, "FHD proportions from 'pad' or 'returns'");
    m->add_option("--crs", metrics.crs, "EPSG code when the input carries none");
    m->add_flag("--write-pad,!--no-write-pad", metrics.write_pad, "Also write the PAD profile grid");

    ResampleOptions resample_opts;
    auto* rs = app.add_subcommand("resample", "Resample a raster to a new cell size");
    rs->add_option("input", resample_opts.input, "Input raster (.asc or binary)")->required();
    rs->add_option("-o,--out", resample_opts.output, "Output (.asc or binary stem)")->required();
    rs->add_option("--target-cell", resample_opts.target_cell, "Target cell size (m)");
    rs->add_option("--method", resample_opts.method, "bilinear or nearest");

    AlignOptions align_opts;
    auto* al = app.add_subcommand("align", "Place a raster on a reference raster's grid");
    al->add_option("input", align_opts.input, "Raster to align")->required();
    al->add_option("--reference", align_opts.reference, "Raster defining the target grid")->required();
    al->add_option("-o,--out", align_opts.output, "Output (.asc or binary stem)")->required();

    PatchifyOptions patch_opts;
    auto* pf = app.add_subcommand("patchify", "Cut co-registered rasters into training patches");
    pf->add_option("inputs", patch_opts.inputs, "Band rasters of one tile")->required();
    pf->add_option("-o,--out", patch_opts.out_dir, "Output directory")->required();
    pf->add_option("--tile-id", patch_opts.tile_id, "Tile identifier used in file names");
    pf->add_option("--patch", patch_opts.patch, "Patch edge (pixels)");
    pf->add_option("--stride", patch_opts.stride, "Patch stride (pixels)");
    pf->add_option("--min-valid", patch_opts.min_valid, "Minimum valid-pixel fraction");
    pf->add_option("--pad", patch_opts.pad, "PAD grid to attach as reduced profiles");
    pf->add_option("--pad-factor", patch_opts.pad_factor, "PAD spatial reduction factor");

    EvaluateOptions eval_opts;
    auto* ev = app.add_subcommand("evaluate", "Compare predicted rasters with references");
    ev->add_option("--pred", eval_opts.preds, "Prediction raster (repeat per tile)")->required();
    ev->add_option("--ref", eval_opts.refs, "Reference raster (repeat per tile)")->required();
    ev->add_option("--threshold", eval_opts.threshold, "IoU/F1 height threshold (m)");
    ev->add_option("--format", eval_opts.format, "json or csv");
    ev->add_option("-o,--out", eval_opts.output, "Report file (default stdout)");

    StitchOptions stitch_opts;
    auto* st = app.add_subcommand("stitch", "Blend window predictions into a full tile");
    st->add_option("windows", stitch_opts.windows_dir, "Directory of win_<row0>_<col0> rasters")->required();
    st->add_option("-o,--out", stitch_opts.output, "Output (.asc or binary stem)")->required();
    st->add_option("--plan", stitch_opts.plan, "Window plan CSV (row0,col0)");
    st->add_option("--height", stitch_opts.height, "Tile height (pixels)");
    st->add_option("--width", stitch_opts.width, "Tile width (pixels)");
    st->add_option("--window", stitch_opts.window, "Window edge (pixels)");
    st->add_option("--overlap", stitch_opts.overlap, "Window overlap (pixels)");
    st->add_option("--blend", stitch_opts.blend, "hann or uniform");
    st->add_option("--band", stitch_opts.band, "Band name of the output");

    LosscheckOptions loss_opts;
    auto* lc = app.add_subcommand("losscheck", "Finite-difference check of every loss gradient");
    lc->add_option("--eps", loss_opts.eps, "Central-difference step");
    lc->add_option("--samples", loss_opts.samples, "Coordinates per input");
    lc->add_option("--tolerance", loss_opts.tolerance, "Maximum accepted relative error");

    DensityOptions density_opts;
    auto* dn = app.add_subcommand("density", "Point density of a cloud (points per square metre)");
    dn->add_option("input", density_opts.input, "LAS or XYZ point cloud")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = e.get_exit_code();
        if (code == 0) {
            out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    try {
        if (m->parsed()) run_metrics(metrics, global, out);
        else if (rs->parsed()) run_resample(resample_opts, global, out);
        else if (al->parsed()) run_align(align_opts, global, out);
        else if (pf->parsed()) run_patchify(patch_opts, global, out);
        else if (ev->parsed()) run_evaluate(eval_opts, global, out);
        else if (st->parsed()) run_stitch(stitch_opts, global, out);
        else if (lc->parsed()) return run_losscheck(loss_opts, global, out);
        else if (dn->parsed()) run_density(density_opts, out);
        return kExitOk;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const PreconditionError& e) {
        err << "precondition error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    }
}

} // namespace canopyforge::cli
