#include "cli/commands.hpp"

#include "cli/manifest.hpp"

#include <canopyforge/error.hpp>
#include <canopyforge/evaluation.hpp>
#include <canopyforge/ground.hpp>
#include <canopyforge/las.hpp>
#include <canopyforge/patching.hpp>
#include <canopyforge/pointcloud.hpp>
#include <canopyforge/raster_io.hpp>
#include <canopyforge/voxel_metrics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace canopyforge::cli {

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// Writes both formats and records their digests.
void write_band(const MetricRaster& r, const fs::path& dir, RunManifest& m) {
    const fs::path stem = dir / r.band_name;
    save_ascii_grid(r, with_suffix(stem, ".asc"));
    save_binary(r, stem);
    m.add_output(with_suffix(stem, ".asc"));
    m.add_output(with_suffix(stem, ".f64"));
    m.add_output(with_suffix(stem, ".hdr"));
}

fs::path manifest_path_for(const fs::path& output) {
    fs::path p = output;
    const auto ext = p.extension().string();
    if (ext == ".asc" || ext == ".f64" || ext == ".hdr") p.replace_extension();
    return with_suffix(p, ".manifest.json");
}

// Saves as ASCII for ".asc" paths, otherwise as a binary stem.
std::vector<fs::path> save_raster(const MetricRaster& r, const fs::path& output) {
    if (output.extension() == ".asc") {
        save_ascii_grid(r, output);
        return {output};
    }
    fs::path stem = output;
    if (stem.extension() == ".f64" || stem.extension() == ".hdr") stem.replace_extension();
    save_binary(r, stem);
    return {with_suffix(stem, ".f64"), with_suffix(stem, ".hdr")};
}

fs::path raster_digest_path(const fs::path& p) {
    if (p.extension() == ".asc" || p.extension() == ".f64") return p;
    if (p.extension() == ".hdr") return fs::path(p).replace_extension(".f64");
    return with_suffix(p, ".f64");
}

} // namespace

std::string window_file_stem(const CellIndex& w) {
    return "win_" + std::to_string(w.row) + "_" + std::to_string(w.col);
}

void run_metrics(const MetricsOptions& o, const GlobalOptions& g, std::ostream& log) {
    PadParams pad_params{o.k, o.dz, o.max_height};
    pad_params.validate();
    if (!(o.cell > 0.0)) throw PreconditionError("cell (grid cell size) must be > 0");
    if (o.percentiles.empty()) throw PreconditionError("percentiles must not be empty");
    std::vector<double> fractions;
    for (double p : o.percentiles) {
        if (!(p >= 0.0 && p <= 100.0)) throw PreconditionError("percentiles must lie in [0, 100]");
        fractions.push_back(p / 100.0);
    }
    if (o.fhd_basis != "pad" && o.fhd_basis != "returns")
        throw InputError("fhd-basis must be 'pad' or 'returns', got '" + o.fhd_basis + "'");
    if (o.ground_neighbors < 1) throw PreconditionError("ground-neighbors must be >= 1");

    const PointCloud cloud = read_point_cloud(o.input, o.crs);
    if (cloud.points.empty()) throw InputError("point cloud '" + o.input.string() + "' has no points");
    const GridSpec grid = GridSpec::covering(cloud.bounds, o.cell, cloud.crs_code);
    GroundParams gp;
    gp.cell_size = o.cell;
    gp.neighbors = static_cast<std::size_t>(o.ground_neighbors);
    gp.idw_power = o.idw_power;
    const GroundGrid ground = build_ground_grid(cloud, grid, gp, g.threads);
    const HagCloud hag = compute_hag(cloud, ground, o.max_height);
    const ReturnHistogramGrid hist = bin_returns(hag, grid, pad_params);
    const PadGrid pad = compute_pad(hist, pad_params, g.threads);

    ensure_dir(o.out_dir);
    RunManifest m;
    m.command = "metrics";
    m.parameters["cell"] = o.cell;
    m.parameters["dz"] = o.dz;
    m.parameters["k"] = o.k;
    m.parameters["max_height"] = o.max_height;
    m.parameters["percentiles"] = o.percentiles;
    m.parameters["ground_neighbors"] = o.ground_neighbors;
    m.parameters["idw_power"] = o.idw_power;
    m.parameters["fhd_basis"] = o.fhd_basis;
    m.parameters["crs"] = cloud.crs_code;
    m.parameters["write_pad"] = o.write_pad;
    m.parameters["threads"] = g.threads;
    m.parameters["seed"] = g.seed;
    m.add_input(o.input);

    write_band(compute_chm(hag, grid), o.out_dir, m);
    write_band(compute_pai(pad, g.threads), o.out_dir, m);
    write_band(o.fhd_basis == "pad" ? compute_fhd(pad, g.threads) : compute_fhd_from_returns(hist, g.threads),
               o.out_dir, m);
    for (const auto& r : compute_percentiles(hag, grid, fractions, g.threads)) write_band(r, o.out_dir, m);
    if (o.write_pad) {
        save_pad_grid(pad, o.out_dir / "pad");
        m.add_output(o.out_dir / "pad.f64");
        m.add_output(o.out_dir / "pad.hdr");
    }

    std::size_t saturated = 0;
    for (auto s : pad.saturated) saturated += s;
    m.summary["points"] = cloud.points.size();
    m.summary["grid_width"] = grid.width;
    m.summary["grid_height"] = grid.height;
    m.summary["layers"] = pad.layers;
    m.summary["hag_clamped"] = hag.clamped_count;
    m.summary["hag_dropped"] = hag.dropped_count;
    m.summary["saturated_layers"] = saturated;
    m.summary["ground_from_all_points"] = ground.used_all_points;
    m.write(o.out_dir / "manifest.json");
    log << "metrics: " << cloud.points.size() << " points -> " << grid.height << "x" << grid.width << " grid, "
        << pad.layers << " layers, written to " << o.out_dir.string() << '\n';
}

void run_resample(const ResampleOptions& o, const GlobalOptions& g, std::ostream& log) {
    const ResampleMethod method = parse_resample_method(o.method);
    const MetricRaster src = load_raster(o.input);
    const MetricRaster out = resample(src, o.target_cell, method);
    const auto written = save_raster(out, o.output);

    RunManifest m;
    m.command = "resample";
    m.parameters["target_cell"] = o.target_cell;
    m.parameters["method"] = to_string(method);
    m.parameters["source_cell"] = src.grid.cell_size;
    m.parameters["threads"] = g.threads;
    m.add_input(raster_digest_path(o.input));
    for (const auto& p : written) m.add_output(p);
    m.write(manifest_path_for(o.output));
    log << "resample: " << src.grid.height << "x" << src.grid.width << " @" << src.grid.cell_size << " m -> "
        << out.grid.height << "x" << out.grid.width << " @" << out.grid.cell_size << " m (" << to_string(method)
        << ")\n";
}

void run_align(const AlignOptions& o, const GlobalOptions& g, std::ostream& log) {
    const MetricRaster src = load_raster(o.input);
    const MetricRaster ref = load_raster(o.reference);
    const MetricRaster out = align_to_reference(src, ref.grid);
    const auto written = save_raster(out, o.output);

    RunManifest m;
    m.command = "align";
    m.parameters["reference_cell"] = ref.grid.cell_size;
    m.parameters["threads"] = g.threads;
    m.add_input(raster_digest_path(o.input));
    m.add_input(raster_digest_path(o.reference));
    for (const auto& p : written) m.add_output(p);
    m.write(manifest_path_for(o.output));
    log << "align: " << out.valid_count() << " of " << out.grid.cell_count() << " reference cells covered\n";
}

void run_patchify(const PatchifyOptions& o, const GlobalOptions& g, std::ostream& log) {
    if (o.inputs.empty()) throw InputError("patchify needs at least one input raster");
    if (o.pad_factor < 1) throw PreconditionError("pad-factor must be >= 1");
    TileRasters tile;
    tile.tile_id = o.tile_id;
    std::vector<MetricRaster> rasters;
    for (const auto& p : o.inputs) {
        MetricRaster r = load_raster(p);
        if (r.band_name.empty()) r.band_name = p.stem().string();
        if (tile.bands.count(r.band_name)) throw InputError("duplicate band '" + r.band_name + "' in patchify inputs");
        rasters.push_back(r);
        tile.bands.emplace(r.band_name, std::move(r));
    }
    tile.mask = build_validity_mask(rasters);
    const PatchSet all = extract_patches(tile, o.patch, o.stride);
    PatchSet kept = filter_patches(all, o.min_valid);
    if (!o.pad.empty()) attach_pad_profiles(kept, load_pad_grid(o.pad), o.pad_factor);
    write_patch_set(kept, o.out_dir);

    RunManifest m;
    m.command = "patchify";
    m.parameters["tile_id"] = o.tile_id;
    m.parameters["patch"] = o.patch;
    m.parameters["stride"] = o.stride;
    m.parameters["min_valid"] = o.min_valid;
    m.parameters["pad_factor"] = o.pad_factor;
    m.parameters["threads"] = g.threads;
    for (const auto& p : o.inputs) m.add_input(raster_digest_path(p));
    if (!o.pad.empty()) m.add_input(raster_digest_path(o.pad));
    m.add_output(o.out_dir / "manifest.csv");
    m.summary["windows"] = all.patches.size();
    m.summary["kept"] = kept.patches.size();
    m.summary["rejected"] = all.patches.size() - kept.patches.size();
    m.write(o.out_dir / "manifest.json");
    log << "patchify: kept " << kept.patches.size() << " of " << all.patches.size() << " patches\n";
}

void run_evaluate(const EvaluateOptions& o, const GlobalOptions&, std::ostream& out) {
    if (o.preds.empty()) throw InputError("evaluate needs at least one prediction raster");
    if (o.preds.size() != o.refs.size())
        throw InputError("evaluate needs one reference per prediction (" + std::to_string(o.preds.size()) + " vs " +
                         std::to_string(o.refs.size()) + ")");
    if (o.format != "json" && o.format != "csv") throw InputError("format must be json or csv");

    std::vector<EvalReport> reports;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < o.preds.size(); ++i) {
        MetricRaster pred = load_raster(o.preds[i]);
        MetricRaster ref = load_raster(o.refs[i]);
        if (ref.band_name.empty()) ref.band_name = "value";
        const std::array<MetricRaster, 2> pair{pred, ref};
        if (!(pred.grid == ref.grid))
            throw GridMismatchError("prediction '" + o.preds[i].string() + "' and reference '" + o.refs[i].string() +
                                    "' are on different grids");
        const MaskRaster mask = build_validity_mask(pair);
        reports.push_back(evaluate(pred, ref, mask, o.threshold));
        ids.push_back(o.preds[i].stem().string());
    }
    const EvalReport report = reports.size() == 1 ? reports.front() : aggregate_tiles(reports, ids);

    auto emit = [&](std::ostream& s) {
        if (o.format == "json")
            write_report_json(report, s);
        else
            write_report_csv(report, s);
    };
    if (o.output.empty()) {
        emit(out);
        return;
    }
    {
        std::ofstream f(o.output, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write report '" + o.output.string() + "'");
        emit(f);
    }
    RunManifest m;
    m.command = "evaluate";
    m.parameters["threshold_m"] = o.threshold;
    m.parameters["format"] = o.format;
    for (std::size_t i = 0; i < o.preds.size(); ++i) {
        m.add_input(raster_digest_path(o.preds[i]));
        m.add_input(raster_digest_path(o.refs[i]));
    }
    m.add_output(o.output);
    m.write(manifest_path_for(o.output));
}

void run_stitch(const StitchOptions& o, const GlobalOptions& g, std::ostream& log) {
    const BlendMode mode = parse_blend_mode(o.blend);
    WindowPlan plan;
    if (!o.plan.empty()) {
        std::ifstream in(o.plan);
        if (!in) throw IoError("cannot open window plan '" + o.plan.string() + "'");
        WindowPlan shape;
        shape.window_size = o.window;
        shape.overlap = o.overlap;
        shape.height = o.height;
        shape.width = o.width;
        plan = read_plan_csv(in, shape);
    } else {
        if (o.height <= 0 || o.width <= 0) throw InputError("stitch needs --plan or --height and --width");
        plan = plan_windows(o.height, o.width, o.window, o.overlap);
    }

    std::vector<std::vector<double>> preds;
    GridSpec grid;
    bool have_grid = false;
    RunManifest m;
    for (const auto& w : plan.windows) {
        const fs::path stem = o.windows_dir / window_file_stem(w);
        const fs::path file = fs::exists(with_suffix(stem, ".asc")) ? with_suffix(stem, ".asc") : with_suffix(stem, ".f64");
        if (!fs::exists(file)) throw IoError("missing window prediction '" + stem.string() + "' (.f64/.hdr or .asc)");
        MetricRaster r = load_raster(file);
        if (r.grid.width != plan.window_size || r.grid.height != plan.window_size)
            throw PreconditionError("window '" + file.string() + "' is " + std::to_string(r.grid.height) + "x" +
                                    std::to_string(r.grid.width) + ", expected " + std::to_string(plan.window_size));
        if (!have_grid) {
            grid = r.grid;
            grid.origin_x = r.grid.origin_x - static_cast<double>(w.col) * r.grid.cell_size;
            grid.origin_y = r.grid.origin_y + static_cast<double>(w.row) * r.grid.cell_size;
            grid.width = plan.width;
            grid.height = plan.height;
            have_grid = true;
        }
        m.add_input(file);
        preds.push_back(std::move(r.values));
    }
    const MetricRaster out = blend_stitch(plan, preds, grid, mode, g.threads, o.band);
    const auto written = save_raster(out, o.output);

    m.command = "stitch";
    m.parameters["window"] = plan.window_size;
    m.parameters["overlap"] = plan.overlap;
    m.parameters["blend"] = to_string(mode);
    m.parameters["height"] = plan.height;
    m.parameters["width"] = plan.width;
    m.parameters["band"] = o.band;
    m.parameters["threads"] = g.threads;
    for (const auto& p : written) m.add_output(p);
    m.summary["windows"] = plan.windows.size();
    m.write(manifest_path_for(o.output));
    log << "stitch: " << plan.windows.size() << " windows -> " << plan.height << "x" << plan.width << '\n';
}

int run_losscheck(const std::vector<GradCheckCase>& cases, const LosscheckOptions& o, const GlobalOptions& g,
                  std::ostream& out) {
    GradCheckOptions opts;
    opts.eps = o.eps;
    opts.samples = o.samples;
    opts.seed = g.seed;
    int status = 0;
    char line[128];
    std::snprintf(line, sizeof line, "%-22s %14s %8s  %s\n", "kernel", "max_rel_error", "coords", "status");
    out << line;
    for (const auto& c : cases) {
        const GradCheckResult r = finite_difference_check(c.kernel, c.inputs, opts);
        const bool ok = r.coords_checked > 0 && r.max_rel_error < o.tolerance;
        if (!ok) status = 1;
        std::snprintf(line, sizeof line, "%-22s %14.3e %8zu  %s\n", c.name.c_str(), r.max_rel_error,
                      r.coords_checked, ok ? "ok" : "FAIL");
        out << line;
    }
    return status;
}

int run_losscheck(const LosscheckOptions& o, const GlobalOptions& g, std::ostream& out) {
    return run_losscheck(standard_gradcheck_cases(g.seed), o, g, out);
}

void run_density(const DensityOptions& o, std::ostream& out) {
    const PointCloud cloud = read_point_cloud(o.input);
    const double d = point_density(cloud);
    char line[160];
    std::snprintf(line, sizeof line, "points: %zu\narea_m2: %.6f\ndensity_pts_per_m2: %.2f\n", cloud.points.size(),
                  cloud.bounds.area(), d);
    out << line;
}

} // namespace canopyforge::cli
