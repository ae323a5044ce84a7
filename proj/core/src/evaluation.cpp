#include "canopyforge/evaluation.hpp"

#include "canopyforge/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace canopyforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t lo = (n - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (n % 2 == 1) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + 0.5 * (b - a);
}

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

nlohmann::json stats_json(const BandStats& s) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < kStatNames.size(); ++i) {
        const double v = stat_value(s, i);
        j[kStatNames[i]] = std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
    }
    j["n_valid"] = s.n_valid;
    return j;
}

BandStats stats_from_json(const nlohmann::json& j) {
    BandStats s;
    for (std::size_t i = 0; i < kStatNames.size(); ++i) {
        const auto& v = j.at(kStatNames[i]);
        stat_value(s, i) = v.is_null() ? kNaN : v.get<double>();
    }
    s.n_valid = j.at("n_valid").get<std::size_t>();
    return s;
}

nlohmann::json bands_json(const std::map<std::string, BandStats>& bands) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, s] : bands) j[name] = stats_json(s);
    return j;
}

std::map<std::string, BandStats> bands_from_json(const nlohmann::json& j) {
    std::map<std::string, BandStats> out;
    for (const auto& [name, v] : j.items()) out[name] = stats_from_json(v);
    return out;
}

} // namespace

double stat_value(const BandStats& s, std::size_t i) {
    return stat_value(const_cast<BandStats&>(s), i);
}

double& stat_value(BandStats& s, std::size_t i) {
    switch (i) {
    case 0: return s.mae;
    case 1: return s.rmse;
    case 2: return s.medae;
    case 3: return s.bias;
    case 4: return s.r2;
    case 5: return s.pearson_r;
    case 6: return s.rmae_percent;
    case 7: return s.iou;
    case 8: return s.f1;
    default: throw PreconditionError("statistic index out of range");
    }
}

BandStats compute_band_stats(std::span<const double> pred, std::span<const double> ref, double threshold_m) {
    if (pred.size() != ref.size()) throw PreconditionError("prediction and reference lengths differ");
    const std::size_t n = pred.size();
    if (n < 2) throw PreconditionError("evaluation needs at least 2 valid pixels, got " + std::to_string(n));
    const double dn = static_cast<double>(n);

    double mean_p = 0.0, mean_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_p += pred[i];
        mean_r += ref[i];
    }
    mean_p /= dn;
    mean_r /= dn;

    double sum_abs = 0.0, sum_sq = 0.0, sum_e = 0.0;
    double var_p = 0.0, var_r = 0.0, cov = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::vector<double> abs_err(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = pred[i] - ref[i];
        abs_err[i] = std::abs(e);
        sum_abs += abs_err[i];
        sum_sq += e * e;
        sum_e += e;
        const double dp = pred[i] - mean_p;
        const double dr = ref[i] - mean_r;
        var_p += dp * dp;
        var_r += dr * dr;
        cov += dp * dr;
        const bool bp = pred[i] > threshold_m;
        const bool br = ref[i] > threshold_m;
        tp += bp && br;
        fp += bp && !br;
        fn += !bp && br;
    }

    BandStats s;
    s.n_valid = n;
    s.mae = sum_abs / dn;
    s.rmse = std::sqrt(sum_sq / dn);
    s.medae = median_of(abs_err);
    s.bias = sum_e / dn;
    s.r2 = var_r > 0.0 ? 1.0 - sum_sq / var_r : kNaN;
    s.pearson_r = var_p > 0.0 && var_r > 0.0 ? std::clamp(cov / std::sqrt(var_p * var_r), -1.0, 1.0) : kNaN;
    s.rmae_percent = mean_r > 0.0 ? 100.0 * s.mae / mean_r : kNaN;
    const std::size_t uni = tp + fp + fn;
    s.iou = uni ? static_cast<double>(tp) / static_cast<double>(uni) : kNaN;
    s.f1 = uni ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : kNaN;
    return s;
}

EvalReport evaluate(const MetricRaster& pred, const MetricRaster& ref, const MaskRaster& mask, double threshold_m) {
    if (!(pred.grid == ref.grid))
        throw GridMismatchError("prediction and reference rasters are on different grids");
    if (!(mask.grid == ref.grid)) throw GridMismatchError("validity mask is on a different grid than the reference");
    pred.validate();
    ref.validate();
    if (mask.valid.size() != ref.values.size()) throw GridMismatchError("validity mask size does not match its grid");

    std::vector<double> p, r;
    p.reserve(ref.values.size());
    r.reserve(ref.values.size());
    for (std::size_t i = 0; i < ref.values.size(); ++i) {
        if (!mask.valid[i] || !pred.is_valid(i) || !ref.is_valid(i)) continue;
        p.push_back(pred.values[i]);
        r.push_back(ref.values[i]);
    }
    EvalReport out;
    out.threshold_m = threshold_m;
    const std::string band = !ref.band_name.empty() ? ref.band_name : "value";
    out.bands[band] = compute_band_stats(p, r, threshold_m);
    return out;
}

void merge_bands(EvalReport& into, const EvalReport& other) {
    if (into.threshold_m != other.threshold_m) throw PreconditionError("cannot merge reports with different thresholds");
    for (const auto& [name, s] : other.bands) into.bands[name] = s;
}

EvalReport aggregate_tiles(const std::vector<EvalReport>& reports, const std::vector<std::string>& tile_ids) {
    if (reports.empty()) throw PreconditionError("aggregate_tiles needs at least one report");
    if (!tile_ids.empty() && tile_ids.size() != reports.size())
        throw PreconditionError("tile id count does not match report count");
    const double threshold = reports.front().threshold_m;
    std::vector<std::string> bands;
    for (const auto& [name, _] : reports.front().bands) bands.push_back(name);
    for (const auto& rep : reports) {
        if (rep.threshold_m != threshold)
            throw PreconditionError("cannot aggregate reports with different thresholds");
        if (rep.bands.size() != bands.size())
            throw PreconditionError("cannot aggregate reports with different bands");
        for (const auto& b : bands)
            if (!rep.bands.count(b)) throw PreconditionError("band '" + b + "' missing from a tile report");
    }

    EvalReport out;
    out.threshold_m = threshold;
    out.n_tiles = reports.size();
    for (const auto& b : bands) {
        BandStats mean, sd;
        for (const auto& rep : reports) mean.n_valid += rep.bands.at(b).n_valid;
        sd.n_valid = mean.n_valid;
        for (std::size_t k = 0; k < kStatNames.size(); ++k) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& rep : reports) {
                const double v = stat_value(rep.bands.at(b), k);
                if (std::isnan(v)) continue;
                sum += v;
                ++n;
            }
            if (n == 0) {
                stat_value(mean, k) = kNaN;
                stat_value(sd, k) = kNaN;
                continue;
            }
            const double m = sum / static_cast<double>(n);
            double ss = 0.0;
            for (const auto& rep : reports) {
                const double v = stat_value(rep.bands.at(b), k);
                if (!std::isnan(v)) ss += (v - m) * (v - m);
            }
            stat_value(mean, k) = m;
            stat_value(sd, k) = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        }
        out.bands[b] = mean;
        out.spread[b] = sd;
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        TileStats t;
        t.tile_id = tile_ids.empty() ? std::to_string(i) : tile_ids[i];
        t.bands = reports[i].bands;
        out.tiles.push_back(std::move(t));
    }
    return out;
}

void write_report_json(const EvalReport& r, std::ostream& out) {
    nlohmann::json j;
    j["threshold_m"] = r.threshold_m;
    j["n_tiles"] = r.n_tiles;
    j["bands"] = bands_json(r.bands);
    j["std"] = bands_json(r.spread);
    nlohmann::json tiles = nlohmann::json::array();
    for (const auto& t : r.tiles) tiles.push_back({{"tile_id", t.tile_id}, {"bands", bands_json(t.bands)}});
    j["tiles"] = std::move(tiles);
    out << j.dump(2) << '\n';
}

EvalReport read_report_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
        EvalReport r;
        r.threshold_m = j.at("threshold_m").get<double>();
        r.n_tiles = j.at("n_tiles").get<std::size_t>();
        r.bands = bands_from_json(j.at("bands"));
        if (j.contains("std")) r.spread = bands_from_json(j.at("std"));
        if (j.contains("tiles"))
            for (const auto& t : j.at("tiles"))
                r.tiles.push_back({t.at("tile_id").get<std::string>(), bands_from_json(t.at("bands"))});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed evaluation report: ") + e.what());
    }
}

void write_report_csv(const EvalReport& r, std::ostream& out) {
    out << "band,metric,value\n";
    for (const auto& [name, s] : r.bands) {
        for (std::size_t k = 0; k < kStatNames.size(); ++k)
            out << name << ',' << kStatNames[k] << ',' << format_value(stat_value(s, k)) << '\n';
        out << name << ",n_valid," << s.n_valid << '\n';
    }
}

} // namespace canopyforge
